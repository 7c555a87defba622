//! Experiment files shipped with the binary.

/// `(name, file contents)` of every preset.
pub const PRESETS: [(&str, &str); 7] = [
    ("nominal", include_str!("../presets/nominal.conf")),
    ("fig3", include_str!("../presets/fig3.conf")),
    ("fig5", include_str!("../presets/fig5.conf")),
    ("fig6", include_str!("../presets/fig6.conf")),
    ("fig7", include_str!("../presets/fig7.conf")),
    ("fig8", include_str!("../presets/fig8.conf")),
    ("table1", include_str!("../presets/table1.conf")),
];

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

/// The first comment line of a preset.
pub fn description(text: &str) -> &str {
    text.lines()
        .next()
        .and_then(|l| l.strip_prefix('#'))
        .map(str::trim)
        .unwrap_or("")
}
