//! Flat `key = value` experiment files.
//!
//! Lines are `key = value`; `#` starts a comment; blank lines are ignored.
//! Every physical quantity carries its unit in the key name (`_m`, `_s`,
//! `_kj`, `_db`, `_dbm`, ...), so a value can never be read in the wrong unit.

use std::fmt;
use std::path::PathBuf;

use uavsec_core::bcd::initialize;
use uavsec_core::scenario::{db_to_linear, dbm_to_watts, noise_power_watts};
use uavsec_core::{BcdConfig, Scenario, Scheme, SpeedBound};

/// One `key = value` line.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConfigFile {
    pub entries: Vec<Entry>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}: `{text}`")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
    pub text: String,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut entries: Vec<Entry> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let err = |message: &str| ParseError {
                line,
                message: message.into(),
                text: raw.trim().into(),
            };
            let (key, value) = body.split_once('=').ok_or_else(|| err("expected `key = value`"))?;
            let key = key.trim();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_') {
                return Err(err("keys are lowercase letters, digits and underscores"));
            }
            if let Some(prev) = entries.iter().find(|e| e.key == key) {
                return Err(err(&format!("duplicate key, first set on line {}", prev.line)));
            }
            entries.push(Entry {
                key: key.into(),
                value: value.trim().into(),
                line,
            });
        }
        Ok(ConfigFile { entries })
    }

    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    /// Sets `key`, replacing an existing value.
    pub fn set(&mut self, key: &str, value: &str) {
        match self.entries.iter_mut().find(|e| e.key == key) {
            Some(e) => e.value = value.into(),
            None => self.entries.push(Entry {
                key: key.into(),
                value: value.into(),
                line: 0,
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

/// One lint result.
#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    pub severity: Severity,
    pub key: Option<String>,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{level}")?;
        if let Some(line) = self.line.filter(|&l| l > 0) {
            write!(f, " (line {line})")?;
        }
        if let Some(key) = &self.key {
            write!(f, " [{key}]")?;
        }
        write!(f, ": {}", self.message)
    }
}

/// How a change of `slots` or `duration_s` is absorbed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HorizonMode {
    /// The slot length is kept; the flight time is `slots * slot_len_s`.
    #[default]
    FixedSlot,
    /// The flight time is kept; the slot length is `duration / slots`.
    FixedDuration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    EveDistance,
    Slots,
    AvgPower,
    EnergyBudget,
    Duration,
}

impl SweepVar {
    pub const ALL: [SweepVar; 5] = [
        SweepVar::EveDistance,
        SweepVar::Slots,
        SweepVar::AvgPower,
        SweepVar::EnergyBudget,
        SweepVar::Duration,
    ];

    /// The config key the sweep overrides.
    pub fn key(self) -> &'static str {
        match self {
            SweepVar::EveDistance => "eve_distance_m",
            SweepVar::Slots => "slots",
            SweepVar::AvgPower => "avg_power_dbm",
            SweepVar::EnergyBudget => "energy_budget_kj",
            SweepVar::Duration => "duration_s",
        }
    }

    /// Short tag used in run names.
    pub fn tag(self) -> &'static str {
        match self {
            SweepVar::EveDistance => "L",
            SweepVar::Slots => "T",
            SweepVar::AvgPower => "P",
            SweepVar::EnergyBudget => "E",
            SweepVar::Duration => "N",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub var: SweepVar,
    pub values: Vec<f64>,
    /// The values as written in the file.
    pub labels: Vec<String>,
}

/// One scenario of an experiment, before the scheme is chosen.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub label: Option<String>,
    pub value: Option<f64>,
    pub scenario: Scenario,
}

/// A fully checked experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    pub horizon_mode: HorizonMode,
    pub schemes: Vec<Scheme>,
    pub sweep: Option<Sweep>,
    pub output_dir: PathBuf,
    pub deterministic: bool,
    pub threads: Option<usize>,
    pub bcd: BcdConfig,
}

impl ExperimentSpec {
    /// The scenario of every sweep point (one point without a sweep).
    pub fn points(&self) -> Vec<Point> {
        match &self.sweep {
            None => vec![Point {
                label: None,
                value: None,
                scenario: self.scenario.clone(),
            }],
            Some(sw) => sw
                .values
                .iter()
                .zip(&sw.labels)
                .map(|(&v, label)| Point {
                    label: Some(label.clone()),
                    value: Some(v),
                    scenario: apply_sweep(&self.scenario, self.horizon_mode, sw.var, v),
                })
                .collect(),
        }
    }
}

fn apply_sweep(base: &Scenario, mode: HorizonMode, var: SweepVar, v: f64) -> Scenario {
    let mut s = base.clone();
    match var {
        SweepVar::EveDistance => s.eve_distance = v,
        SweepVar::AvgPower => {
            let ratio = base.peak_power / base.avg_power;
            s.avg_power = dbm_to_watts(v);
            s.peak_power = ratio * s.avg_power;
        }
        SweepVar::EnergyBudget => s.energy_budget = v * 1e3,
        SweepVar::Slots => {
            s.slots = v as usize;
            if mode == HorizonMode::FixedDuration {
                s.slot_len = base.duration() / s.slots as f64;
            }
        }
        SweepVar::Duration => match mode {
            HorizonMode::FixedSlot => s.slots = (v / base.slot_len).round() as usize,
            HorizonMode::FixedDuration => s.slot_len = v / base.slots as f64,
        },
    }
    s
}

/// Result of checking a config file.
#[derive(Debug, Clone, PartialEq)]
pub struct Lint {
    pub spec: Option<ExperimentSpec>,
    pub findings: Vec<Finding>,
}

impl Lint {
    pub fn has_errors(&self) -> bool {
        self.findings.iter().any(|f| f.severity == Severity::Error)
    }

    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Error)
    }
}

/// Keys that describe the instance; all must be present.
pub const SCENARIO_KEYS: [&str; 15] = [
    "eve_distance_m",
    "altitude_m",
    "start_x_m",
    "start_y_m",
    "end_x_m",
    "end_y_m",
    "slots",
    "slot_len_s",
    "max_speed_mps",
    "mass_kg",
    "energy_budget_kj",
    "ref_gain_db",
    "noise_density_dbm_hz",
    "bandwidth_hz",
    "avg_power_dbm",
];

/// Keys with defaults, plus the two alternative peak-power keys.
pub const OPTIONAL_KEYS: [&str; 18] = [
    "peak_power_dbm",
    "peak_power_ratio",
    "speed_bound",
    "horizon_mode",
    "schemes",
    "sweep",
    "sweep_values",
    "output_dir",
    "deterministic",
    "threads",
    "tol",
    "max_outer",
    "warm_start",
    "admm_max_iter",
    "admm_eps",
    "admm_penalty_scale",
    "record_admm",
    "power_max_bisections",
];

const UNIT_SUFFIXES: [&str; 9] = ["_dbm_hz", "_dbm", "_db", "_kj", "_mps", "_kg", "_hz", "_m", "_s"];
const STRAY_SUFFIXES: [&str; 6] = ["_w", "_mw", "_j", "_lin", "_linear", "_km"];

fn known(key: &str) -> bool {
    SCENARIO_KEYS.contains(&key) || OPTIONAL_KEYS.contains(&key)
}

fn stem(key: &str) -> &str {
    UNIT_SUFFIXES
        .iter()
        .chain(STRAY_SUFFIXES.iter())
        .find_map(|s| key.strip_suffix(s))
        .unwrap_or(key)
}

struct Linter<'a> {
    cfg: &'a ConfigFile,
    findings: Vec<Finding>,
}

impl<'a> Linter<'a> {
    fn push(&mut self, severity: Severity, key: Option<&str>, message: String) {
        let line = key.and_then(|k| self.cfg.get(k)).map(|e| e.line);
        self.findings.push(Finding {
            severity,
            key: key.map(str::to_string),
            line,
            message,
        });
    }

    fn error(&mut self, key: &str, message: impl Into<String>) {
        self.push(Severity::Error, Some(key), message.into());
    }

    fn warn(&mut self, key: &str, message: impl Into<String>) {
        self.push(Severity::Warning, Some(key), message.into());
    }

    fn raw(&self, key: &str) -> Option<&'a str> {
        self.cfg.get(key).map(|e| e.value.as_str())
    }

    fn number(&mut self, key: &str) -> Option<f64> {
        let raw = self.raw(key)?;
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Some(v),
            _ => {
                self.error(key, format!("`{raw}` is not a finite number"));
                None
            }
        }
    }

    fn required(&mut self, key: &str) -> Option<f64> {
        if self.raw(key).is_none() {
            self.error(key, format!("missing required key `{key}`"));
            return None;
        }
        self.number(key)
    }

    fn positive(&mut self, key: &str, v: Option<f64>) -> Option<f64> {
        match v {
            Some(x) if x <= 0.0 => {
                self.error(key, format!("must be positive, got {x}"));
                None
            }
            other => other,
        }
    }

    fn positive_number(&mut self, key: &str) -> Option<f64> {
        let v = self.number(key);
        self.positive(key, v)
    }

    fn count(&mut self, key: &str, min: usize) -> Option<usize> {
        let raw = self.raw(key)?;
        match raw.parse::<usize>() {
            Ok(v) if v >= min => Some(v),
            _ => {
                self.error(key, format!("`{raw}` is not an integer >= {min}"));
                None
            }
        }
    }

    fn flag(&mut self, key: &str) -> Option<bool> {
        let raw = self.raw(key)?;
        match raw {
            "true" | "yes" | "1" => Some(true),
            "false" | "no" | "0" => Some(false),
            _ => {
                self.error(key, format!("`{raw}` is not a boolean"));
                None
            }
        }
    }
}

fn parse_scheme(name: &str) -> Option<Scheme> {
    match name {
        "proposed" | "full" => Some(Scheme::Joint),
        "ft" => Some(Scheme::FixedTrajectory),
        "nps" => Some(Scheme::FixedSplit(0.5)),
        "noan" => Some(Scheme::NoJamming),
        _ => None,
    }
}

fn split_list(raw: &str) -> Vec<&str> {
    raw.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}

/// Checks units, ranges and straight-line feasibility of every sweep point
/// without running any solver.
pub fn lint(cfg: &ConfigFile) -> Lint {
    let mut l = Linter {
        cfg,
        findings: Vec::new(),
    };

    for e in &cfg.entries {
        if known(&e.key) {
            continue;
        }
        let s = stem(&e.key);
        let hint = SCENARIO_KEYS
            .iter()
            .chain(OPTIONAL_KEYS.iter())
            .find(|k| stem(k) == s || **k == s);
        match hint {
            Some(k) => l.error(&e.key, format!("unknown key; unit suffix mismatch, expected `{k}`")),
            None => l.error(&e.key, "unknown key"),
        }
    }

    let mut vals = std::collections::HashMap::new();
    for key in SCENARIO_KEYS {
        if key == "slots" {
            if l.raw(key).is_none() {
                l.error(key, "missing required key `slots`");
            }
            continue;
        }
        if let Some(v) = l.required(key) {
            vals.insert(key, v);
        }
    }
    let slots = l.count("slots", 2);
    for key in ["altitude_m", "slot_len_s", "max_speed_mps", "mass_kg", "energy_budget_kj", "bandwidth_hz"] {
        let v = vals.get(key).copied();
        if l.positive(key, v).is_none() {
            vals.remove(key);
        }
    }
    if let Some(&v) = vals.get("eve_distance_m") {
        if v < 0.0 {
            l.error("eve_distance_m", format!("must be non-negative, got {v}"));
        }
    }
    if let Some(&v) = vals.get("ref_gain_db") {
        if v > 0.0 {
            l.warn("ref_gain_db", format!("{v} dB is a gain above 1; is this a linear value?"));
        }
    }
    if let Some(&v) = vals.get("noise_density_dbm_hz") {
        if v > -100.0 {
            l.warn("noise_density_dbm_hz", format!("{v} dBm/Hz is unusually high; is this a linear value?"));
        }
    }
    if let Some(&v) = vals.get("avg_power_dbm") {
        if v > 50.0 {
            l.warn("avg_power_dbm", format!("{v} dBm is above 100 W; is this in watts?"));
        }
    }

    let avg = vals.get("avg_power_dbm").map(|&d| dbm_to_watts(d));
    let peak = match (l.raw("peak_power_dbm"), l.raw("peak_power_ratio")) {
        (Some(_), Some(_)) => {
            l.error("peak_power_ratio", "set either `peak_power_dbm` or `peak_power_ratio`, not both");
            None
        }
        (None, None) => {
            l.error("peak_power_dbm", "missing required key `peak_power_dbm` (or `peak_power_ratio`)");
            None
        }
        (Some(_), None) => {
            let p = l.number("peak_power_dbm");
            if let (Some(p), Some(a)) = (p, vals.get("avg_power_dbm")) {
                if p < *a {
                    l.error("peak_power_dbm", format!("peak power {p} dBm is below average power {a} dBm"));
                }
            }
            p.map(dbm_to_watts)
        }
        (None, Some(_)) => {
            let r = l.number("peak_power_ratio");
            if let Some(r) = r {
                if r < 1.0 {
                    l.error("peak_power_ratio", format!("peak power is {r} times the average power, below 1"));
                }
            }
            r.zip(avg).map(|(r, a)| r * a)
        }
    };

    let speed_bound = match l.raw("speed_bound") {
        None | Some("speed_times_slot") => Some(SpeedBound::SpeedTimesSlot),
        Some("per_slot") => Some(SpeedBound::PerSlot),
        Some(other) => {
            l.error("speed_bound", format!("`{other}` is not one of speed_times_slot, per_slot"));
            None
        }
    };
    let horizon_mode = match l.raw("horizon_mode") {
        None | Some("fixed_slot") => HorizonMode::FixedSlot,
        Some("fixed_duration") => HorizonMode::FixedDuration,
        Some(other) => {
            l.error("horizon_mode", format!("`{other}` is not one of fixed_slot, fixed_duration"));
            HorizonMode::FixedSlot
        }
    };

    let mut schemes = Vec::new();
    match l.raw("schemes") {
        None => l.error("schemes", "missing required key `schemes`"),
        Some(raw) => {
            let names = split_list(raw);
            if names.is_empty() {
                l.error("schemes", "empty scheme list");
            }
            for name in names {
                match parse_scheme(name) {
                    Some(s) if schemes.contains(&s) => l.error("schemes", format!("`{name}` listed twice")),
                    Some(s) => schemes.push(s),
                    None => l.error("schemes", format!("unknown scheme `{name}` (expected proposed, ft, nps, noan)")),
                }
            }
        }
    }

    let sweep = match (l.raw("sweep"), l.raw("sweep_values")) {
        (None, None) => None,
        (None, Some(_)) => {
            l.error("sweep_values", "`sweep_values` given without `sweep`");
            None
        }
        (Some(_), None) => {
            l.error("sweep", "missing required key `sweep_values`");
            None
        }
        (Some(var), Some(raw)) => match SweepVar::ALL.iter().find(|v| v.key() == var) {
            None => {
                let names: Vec<_> = SweepVar::ALL.iter().map(|v| v.key()).collect();
                l.error("sweep", format!("`{var}` is not one of {}", names.join(", ")));
                None
            }
            Some(&var) => {
                let mut values = Vec::new();
                let mut labels = Vec::new();
                let mut ok = true;
                let items = split_list(raw);
                if items.is_empty() {
                    l.error("sweep_values", "empty value list");
                    ok = false;
                }
                for item in items {
                    let v = item.parse::<f64>().ok().filter(|v| v.is_finite());
                    let valid = match (var, v) {
                        (_, None) => false,
                        (SweepVar::Slots, Some(v)) => v.fract() == 0.0 && v >= 2.0,
                        (SweepVar::AvgPower, Some(_)) => true,
                        (SweepVar::EveDistance, Some(v)) => v >= 0.0,
                        (_, Some(v)) => v > 0.0,
                    };
                    if !valid {
                        l.error("sweep_values", format!("`{item}` is not a valid value for `{}`", var.key()));
                        ok = false;
                        continue;
                    }
                    values.push(v.unwrap());
                    labels.push(item.to_string());
                }
                ok.then_some(Sweep { var, values, labels })
            }
        },
    };

    let output_dir = PathBuf::from(l.raw("output_dir").unwrap_or("out"));
    let deterministic = l.flag("deterministic").unwrap_or(false);
    let threads = l.count("threads", 1);

    let mut bcd = BcdConfig::default();
    bcd.admm.record_history = true;
    if let Some(v) = l.positive_number("tol") {
        bcd.tol = v;
    }
    if let Some(v) = l.count("max_outer", 1) {
        bcd.max_outer = v;
    }
    if let Some(v) = l.flag("warm_start") {
        bcd.warm_start = v;
    }
    if let Some(v) = l.count("admm_max_iter", 1) {
        bcd.admm.max_iter = v;
    }
    if let Some(v) = l.positive_number("admm_eps") {
        bcd.admm.eps = Some(v);
    }
    if let Some(v) = l.positive_number("admm_penalty_scale") {
        bcd.admm.penalty_scale = v;
    }
    if let Some(v) = l.flag("record_admm") {
        bcd.admm.record_history = v;
    }
    if let Some(v) = l.count("power_max_bisections", 1) {
        bcd.power.max_bisections = v;
    }

    let get = |k: &str| vals.get(k).copied();
    let scenario = (|| {
        Some(Scenario {
            eve_distance: get("eve_distance_m")?,
            altitude: get("altitude_m")?,
            start: (get("start_x_m")?, get("start_y_m")?),
            end: (get("end_x_m")?, get("end_y_m")?),
            slots: slots?,
            slot_len: get("slot_len_s")?,
            max_speed: get("max_speed_mps")?,
            speed_bound: speed_bound?,
            mass: get("mass_kg")?,
            energy_budget: get("energy_budget_kj")? * 1e3,
            ref_gain: db_to_linear(get("ref_gain_db")?),
            noise_power: noise_power_watts(get("noise_density_dbm_hz")?, get("bandwidth_hz")?),
            avg_power: avg?,
            peak_power: peak?,
        })
    })();

    let spec = match scenario {
        Some(scenario) if !l.findings.iter().any(|f| f.severity == Severity::Error) => {
            let spec = ExperimentSpec {
                scenario,
                horizon_mode,
                schemes,
                sweep,
                output_dir,
                deterministic,
                threads,
                bcd,
            };
            check_points(&mut l, &spec);
            Some(spec)
        }
        _ => None,
    };
    let spec = spec.filter(|_| !l.findings.iter().any(|f| f.severity == Severity::Error));
    Lint {
        spec,
        findings: l.findings,
    }
}

fn check_points(l: &mut Linter, spec: &ExperimentSpec) {
    if let Some(sw) = &spec.sweep {
        if sw.var == SweepVar::Duration && spec.horizon_mode == HorizonMode::FixedSlot {
            for (v, label) in sw.values.iter().zip(&sw.labels) {
                let t = v / spec.scenario.slot_len;
                if (t - t.round()).abs() > 1e-9 * t.abs().max(1.0) || t.round() < 2.0 {
                    l.error("sweep_values", format!("duration {label} s is not a whole number (>= 2) of {} s slots", spec.scenario.slot_len));
                }
            }
        }
    }
    if l.findings.iter().any(|f| f.severity == Severity::Error) {
        return;
    }
    for point in spec.points() {
        let key = match (&spec.sweep, &point.label) {
            (Some(sw), Some(label)) => format!("{} = {label}", sw.var.key()),
            _ => "scenario".to_string(),
        };
        if let Err(e) = point.scenario.validate().and_then(|_| initialize(&point.scenario, Scheme::Joint).map(|_| ())) {
            l.push(Severity::Error, None, format!("{key}: {e}"));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let c = ConfigFile::parse("# header\n\n a_m = 1 # trailing\nb=two\n").unwrap();
        assert_eq!(c.entries.len(), 2);
        assert_eq!(c.get("a_m").unwrap().value, "1");
        assert_eq!(c.get("a_m").unwrap().line, 3);
        assert_eq!(c.get("b").unwrap().value, "two");
    }

    #[test]
    fn malformed_line_reports_its_number() {
        let e = ConfigFile::parse("a = 1\njust words\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.to_string().contains("line 2"), "{e}");
        let e = ConfigFile::parse("a = 1\na = 2\n").unwrap_err();
        assert!(e.message.contains("duplicate"), "{e}");
    }

    #[test]
    fn stems_drop_unit_suffixes() {
        assert_eq!(stem("energy_budget_kj"), "energy_budget");
        assert_eq!(stem("energy_budget_j"), "energy_budget");
        assert_eq!(stem("noise_density_dbm_hz"), "noise_density");
        assert_eq!(stem("slots"), "slots");
    }

    #[test]
    fn fixed_duration_sweep_keeps_the_flight_time() {
        let base = Scenario::nominal();
        let s = apply_sweep(&base, HorizonMode::FixedDuration, SweepVar::Slots, 500.0);
        assert_eq!(s.slots, 500);
        assert!((s.duration() - base.duration()).abs() < 1e-9);
        let s = apply_sweep(&base, HorizonMode::FixedSlot, SweepVar::Duration, 103.0);
        assert_eq!(s.slots, 206);
        assert_eq!(s.slot_len, base.slot_len);
    }
}
