//! CSV artifacts: summary, per-run traces and trajectories.

use std::fs::File;
use std::io;
use std::path::Path;

use uavsec_core::model::{PowerPlan, Trajectory};
use uavsec_core::RunReport;

/// Significant digits of every number written.
pub const SIG_DIGITS: usize = 12;

/// Formats `v` with [`SIG_DIGITS`] significant digits, plain notation for
/// moderate exponents, scientific otherwise, trailing zeros removed.
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, v);
    let (mant, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..SIG_DIGITS as i32).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mant.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn ms(d: std::time::Duration) -> String {
    fmt_num(d.as_secs_f64() * 1e3)
}

fn writer(path: &Path) -> io::Result<csv::Writer<File>> {
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(File::create(path)?))
}

fn csv_err(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

/// One finished run as it appears in the summary.
pub struct SummaryRow<'a> {
    pub run: &'a str,
    pub scheme: &'a str,
    pub sweep: Option<(&'a str, &'a str)>,
    pub report: &'a RunReport,
}

pub const SUMMARY_HEADER: [&str; 14] = [
    "run",
    "scheme",
    "sweep",
    "value",
    "rate_bits",
    "objective_bits",
    "outer_iterations",
    "converged",
    "max_admm_iterations",
    "total_admm_iterations",
    "feasible",
    "total_ms",
    "power_ms",
    "trajectory_ms",
];

/// Writes `summary.csv`. Timing columns are left empty when `with_timings`
/// is false so that the file only depends on the inputs.
pub fn write_summary(path: &Path, rows: &[SummaryRow], with_timings: bool) -> io::Result<()> {
    let mut w = writer(path)?;
    w.write_record(SUMMARY_HEADER).map_err(csv_err)?;
    for row in rows {
        let r = row.report;
        let (sweep, value) = row.sweep.unwrap_or(("", ""));
        let timing = |d| if with_timings { ms(d) } else { String::new() };
        let max_admm = r.trace.iter().map(|t| t.admm_iterations).max().unwrap_or(0);
        let total_admm: usize = r.trace.iter().map(|t| t.admm_iterations).sum();
        w.write_record([
            row.run.to_string(),
            row.scheme.to_string(),
            sweep.to_string(),
            value.to_string(),
            fmt_num(r.secrecy_rate_bits),
            fmt_num(r.objective_bits),
            r.outer_iterations.to_string(),
            r.converged.to_string(),
            max_admm.to_string(),
            total_admm.to_string(),
            r.feasibility.all_passed().to_string(),
            timing(r.total_time),
            timing(r.power_time),
            timing(r.trajectory_time),
        ])
        .map_err(csv_err)?;
    }
    w.flush()
}

/// Writes `trace_<run>.csv` in long form: `outer` rows carry the objective
/// after each outer iteration (iteration 0 is the starting point), `admm`
/// rows carry the residuals of every ADMM iteration inside outer iteration
/// `outer`.
pub fn write_trace(path: &Path, initial_bits: f64, report: &RunReport) -> io::Result<()> {
    let mut w = writer(path)?;
    w.write_record(["kind", "outer", "iteration", "objective_bits", "r_norm", "s_norm"]).map_err(csv_err)?;
    let outer = |w: &mut csv::Writer<File>, k: usize, v: f64| {
        w.write_record(["outer".into(), k.to_string(), k.to_string(), fmt_num(v), String::new(), String::new()])
            .map_err(csv_err)
    };
    outer(&mut w, 0, initial_bits)?;
    for rec in &report.trace {
        outer(&mut w, rec.iteration, rec.objective_bits)?;
    }
    for rec in &report.trace {
        for (j, &(r, s)) in rec.admm_history.iter().enumerate() {
            w.write_record([
                "admm".into(),
                rec.iteration.to_string(),
                (j + 1).to_string(),
                String::new(),
                fmt_num(r),
                fmt_num(s),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()
}

/// Writes `traj_<run>.csv`: `slot` (from 1), `x`, `y`, `p`, `rho`.
pub fn write_trajectory(path: &Path, traj: &Trajectory, plan: &PowerPlan) -> io::Result<()> {
    let mut w = writer(path)?;
    w.write_record(["slot", "x", "y", "p", "rho"]).map_err(csv_err)?;
    for k in 0..traj.len() {
        w.write_record([
            (k + 1).to_string(),
            fmt_num(traj.x[k]),
            fmt_num(traj.y[k]),
            fmt_num(plan.p[k]),
            fmt_num(plan.rho[k]),
        ])
        .map_err(csv_err)?;
    }
    w.flush()
}

/// Reads a file written by [`write_trajectory`].
pub fn read_trajectory(path: &Path) -> io::Result<(Trajectory, PowerPlan)> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let bad = |msg: String| io::Error::new(io::ErrorKind::InvalidData, msg);
    let (mut x, mut y, mut p, mut rho) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != 5 {
            return Err(bad(format!("row {}: expected 5 fields, got {}", i + 1, rec.len())));
        }
        let num = |j: usize| {
            rec[j]
                .parse::<f64>()
                .map_err(|_| bad(format!("row {}: `{}` is not a number", i + 1, &rec[j])))
        };
        if rec[0].parse::<usize>().ok() != Some(i + 1) {
            return Err(bad(format!("row {}: slot `{}` out of order", i + 1, &rec[0])));
        }
        x.push(num(1)?);
        y.push(num(2)?);
        p.push(num(3)?);
        rho.push(num(4)?);
    }
    let traj = Trajectory::new(x, y).map_err(|e| bad(e.to_string()))?;
    Ok((traj, PowerPlan { p, rho }))
}

/// Writes `error.csv`, one row per failed run.
pub fn write_errors(path: &Path, errors: &[(String, String, String)]) -> io::Result<()> {
    let mut w = writer(path)?;
    w.write_record(["run", "kind", "message"]).map_err(csv_err)?;
    for (run, kind, msg) in errors {
        w.write_record([run, kind, msg]).map_err(csv_err)?;
    }
    w.flush()
}
