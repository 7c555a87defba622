use std::fs;
use std::path::Path;
use std::process::Command;

use uavsec_cli::config::SweepVar;
use uavsec_cli::output::{read_trajectory, SIG_DIGITS};
use uavsec_cli::{checked_spec, lint, presets, run_text, CliError, ConfigFile, Overrides, Severity};
use uavsec_core::check_feasibility;

const SMALL: &str = "\
eve_distance_m = 40
altitude_m = 100
start_x_m = -60
start_y_m = -30
end_x_m = 60
end_y_m = -30
slots = 40
slot_len_s = 0.5
max_speed_mps = 12
mass_kg = 4
energy_budget_kj = 1.0
ref_gain_db = -36
noise_density_dbm_hz = -169
bandwidth_hz = 20e6
avg_power_dbm = 0
peak_power_ratio = 4
schemes = proposed, ft, nps, noan
";

fn with(base: &str, extra: &str) -> String {
    format!("{base}{extra}\n")
}

fn without(base: &str, key: &str) -> String {
    base.lines()
        .filter(|l| !l.starts_with(&format!("{key} ")))
        .map(|l| format!("{l}\n"))
        .collect()
}

fn findings(text: &str) -> Vec<uavsec_cli::Finding> {
    lint(&ConfigFile::parse(text).unwrap()).findings
}

fn quiet() -> Overrides {
    Overrides {
        quiet: true,
        ..Overrides::default()
    }
}

#[test]
fn every_preset_is_clean() {
    for (name, text) in presets::PRESETS {
        let f = findings(text);
        assert!(f.is_empty(), "{name}: {f:?}");
        assert!(!presets::description(text).is_empty());
    }
}

#[test]
fn peak_below_average_is_an_error() {
    let text = with(&without(SMALL, "peak_power_ratio"), "peak_power_dbm = -3");
    let f = findings(&text);
    assert!(f.iter().any(|f| f.severity == Severity::Error && f.key.as_deref() == Some("peak_power_dbm")), "{f:?}");
    let f = findings(&with(&without(SMALL, "peak_power_ratio"), "peak_power_ratio = 0.5"));
    assert!(f.iter().any(|f| f.severity == Severity::Error && f.message.contains("below 1")), "{f:?}");
}

#[test]
fn missing_energy_budget_names_the_key() {
    let f = findings(&without(SMALL, "energy_budget_kj"));
    let e: Vec<_> = f.iter().filter(|f| f.severity == Severity::Error).collect();
    assert_eq!(e.len(), 1, "{f:?}");
    assert_eq!(e[0].key.as_deref(), Some("energy_budget_kj"));
    assert!(e[0].to_string().contains("energy_budget_kj"));
}

#[test]
fn wrong_unit_suffix_points_to_the_right_key() {
    let text = with(&without(SMALL, "energy_budget_kj"), "energy_budget_j = 1000");
    let f = findings(&text);
    assert!(
        f.iter().any(|f| f.key.as_deref() == Some("energy_budget_j") && f.message.contains("energy_budget_kj")),
        "{f:?}"
    );
}

#[test]
fn suspicious_decibel_values_warn() {
    let text = with(&without(SMALL, "ref_gain_db"), "ref_gain_db = 0.000251");
    let f = findings(&text);
    assert!(f.iter().any(|f| f.severity == Severity::Warning && f.key.as_deref() == Some("ref_gain_db")), "{f:?}");
    assert!(!f.iter().any(|f| f.severity == Severity::Error));
}

#[test]
fn straight_line_precheck_covers_every_sweep_point() {
    // 120 m over 39 steps fits 6 m per slot; at 20 slots it needs 6.3 m
    let text = with(SMALL, "sweep = slots\nsweep_values = 40, 20");
    let f = findings(&text);
    assert!(f.iter().any(|f| f.severity == Severity::Error && f.message.contains("slots = 20")), "{f:?}");
    let text = with(SMALL, "sweep = duration_s\nsweep_values = 20.2");
    assert!(findings(&text).iter().any(|f| f.message.contains("whole number")));
}

#[test]
fn sweep_points_override_the_scenario() {
    let spec = checked_spec(&with(SMALL, "sweep = eve_distance_m\nsweep_values = 50, 300")).unwrap();
    let sw = spec.sweep.as_ref().unwrap();
    assert_eq!(sw.var, SweepVar::EveDistance);
    let pts = spec.points();
    assert_eq!(pts.len(), 2);
    assert_eq!(pts[1].scenario.eve_distance, 300.0);
    let names: Vec<_> = uavsec_cli::jobs(&spec).into_iter().map(|j| j.name).collect();
    assert_eq!(names[0], "proposed_L50");
    assert_eq!(names[7], "noan_L300");

    let spec = checked_spec(&with(SMALL, "sweep = avg_power_dbm\nsweep_values = 10")).unwrap();
    let s = &spec.points()[0].scenario;
    assert!((s.avg_power - 1e-2).abs() < 1e-15);
    assert!((s.peak_power - 4e-2).abs() < 1e-15);
}

#[test]
fn empty_scheme_list_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let text = with(&without(SMALL, "schemes"), "schemes =");
    let ov = Overrides {
        output_dir: Some(out.clone()),
        ..quiet()
    };
    match run_text(&text, &ov) {
        Err(e @ CliError::Invalid(_)) => {
            assert_eq!(e.exit_code(), 1);
            assert!(e.to_string().contains("empty scheme list"), "{e}");
        }
        other => panic!("{other:?}"),
    }
    assert!(!out.exists());
}

fn significant_digits(field: &str) -> usize {
    let mant = field.split('e').next().unwrap();
    let digits: String = mant.chars().filter(|c| c.is_ascii_digit()).collect();
    digits.trim_start_matches('0').trim_end_matches('0').len()
}

fn run_small(dir: &Path, threads: usize) -> uavsec_cli::Artifacts {
    let ov = Overrides {
        output_dir: Some(dir.to_path_buf()),
        threads: Some(threads),
        deterministic: true,
        quiet: true,
    };
    run_text(&with(SMALL, "sweep = eve_distance_m\nsweep_values = 40, 80"), &ov).unwrap()
}

#[test]
fn run_writes_summary_traces_and_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let art = run_small(dir.path(), 1);
    assert_eq!(art.traces.len(), 8);
    assert_eq!(art.trajectories.len(), 8);
    assert!(art.errors.is_none());

    let summary = fs::read_to_string(&art.summary).unwrap();
    let mut lines = summary.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("run,scheme,sweep,value,rate_bits"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 8);
    for r in &rows {
        assert_eq!(r[2], "eve_distance_m");
        assert_eq!(r[10], "true", "{r:?}");
        assert!(r[11].is_empty(), "timings are blank in deterministic mode");
        let rate: f64 = r[4].parse().unwrap();
        assert!(rate >= 0.0);
        assert!(significant_digits(r[4]) <= SIG_DIGITS);
    }
    assert!(summary.contains("\r\n"));

    let trace = fs::read_to_string(dir.path().join("trace_proposed_L40.csv")).unwrap();
    assert!(trace.lines().nth(1).unwrap().starts_with("outer,0,0,"));
    assert!(trace.lines().any(|l| l.starts_with("admm,1,1,,")));
    let ft = fs::read_to_string(dir.path().join("trace_ft_L40.csv")).unwrap();
    assert!(!ft.lines().any(|l| l.starts_with("admm")));

    let traj = fs::read_to_string(dir.path().join("traj_noan_L80.csv")).unwrap();
    assert_eq!(traj.lines().next().unwrap(), "slot,x,y,p,rho");
    for line in traj.lines().skip(1) {
        for field in line.split(',').skip(1) {
            assert!(significant_digits(field) <= SIG_DIGITS, "{field}");
        }
        assert!(line.ends_with(",1"), "no jamming keeps rho = 1: {line}");
    }
}

#[test]
fn written_plans_pass_the_feasibility_check_when_read_back() {
    let dir = tempfile::tempdir().unwrap();
    let art = run_small(dir.path(), 1);
    let spec = checked_spec(&with(SMALL, "sweep = eve_distance_m\nsweep_values = 40, 80")).unwrap();
    let scen = &spec.points()[0].scenario;
    for path in &art.trajectories {
        let (traj, plan) = read_trajectory(path).unwrap();
        let report = check_feasibility(&traj, &plan, scen);
        assert!(report.all_passed(), "{}: {report}", path.display());
    }
}

#[test]
fn deterministic_outputs_are_byte_stable_across_worker_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let art_a = run_small(a.path(), 1);
    let art_b = run_small(b.path(), 3);
    let files = |art: &uavsec_cli::Artifacts| {
        let mut v = vec![art.summary.clone()];
        v.extend(art.traces.iter().cloned());
        v.extend(art.trajectories.iter().cloned());
        v
    };
    for (x, y) in files(&art_a).iter().zip(files(&art_b).iter()) {
        assert_eq!(x.file_name(), y.file_name());
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{}", x.display());
    }
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_uavsec"))
}

#[test]
fn binary_exit_codes() {
    let out = bin().args(["presets", "list"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let listing = String::from_utf8(out.stdout).unwrap();
    for name in ["nominal", "fig3", "fig5", "fig6", "fig7", "fig8", "table1"] {
        assert!(listing.contains(name));
    }

    let out = bin().args(["validate", "nominal"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.conf");
    fs::write(&bad, without(SMALL, "energy_budget_kj")).unwrap();
    let out = bin().arg("validate").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stdout).unwrap().contains("energy_budget_kj"));

    fs::write(&bad, "slots = 10\nthis line is broken\n").unwrap();
    let out = bin().arg("run").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("line 2"));

    let stuck = dir.path().join("stuck.conf");
    fs::write(&stuck, with(&without(SMALL, "schemes"), "schemes = proposed\nadmm_max_iter = 1")).unwrap();
    let out_dir = dir.path().join("stuck");
    let out = bin().arg("run").arg(&stuck).arg("--out").arg(&out_dir).arg("-q").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let record = fs::read_to_string(out_dir.join("error.csv")).unwrap();
    assert!(record.starts_with("run,kind,message"));
    assert!(record.contains("proposed,convergence,"), "{record}");

    let ok_dir = dir.path().join("ok");
    let good = dir.path().join("good.conf");
    fs::write(&good, with(&without(SMALL, "schemes"), "schemes = ft")).unwrap();
    let out = bin()
        .arg("run")
        .arg(&good)
        .arg("--out")
        .arg(&ok_dir)
        .env("UAVSEC_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(ok_dir.join("summary.csv").exists());
    assert!(ok_dir.join("traj_ft.csv").exists());
}
