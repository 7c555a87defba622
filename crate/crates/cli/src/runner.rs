//! Executes an experiment and writes its artifacts.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use uavsec_core::bcd::initialize;
use uavsec_core::model::{nats_to_bits, objective};
use uavsec_core::{bcd_run, BcdConfig, Error, RunReport, Scheme};

use crate::config::{ExperimentSpec, Point};
use crate::output::{write_errors, write_summary, write_trace, write_trajectory, SummaryRow};

/// Environment variable with the default worker count.
pub const THREADS_ENV: &str = "UAVSEC_THREADS";

/// One (scheme, sweep point) pair.
#[derive(Debug, Clone)]
pub struct Job {
    pub name: String,
    pub scheme: Scheme,
    pub point: Point,
}

#[derive(Debug, Clone)]
pub struct JobResult {
    pub job: Job,
    /// Objective of the starting point, bits/s/Hz.
    pub initial_bits: f64,
    pub outcome: Result<RunReport, Error>,
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect()
}

/// Jobs in output order: sweep points outer, schemes inner.
pub fn jobs(spec: &ExperimentSpec) -> Vec<Job> {
    let mut out = Vec::new();
    for point in spec.points() {
        for &scheme in &spec.schemes {
            let name = match (&spec.sweep, &point.label) {
                (Some(sw), Some(label)) => format!("{}_{}{}", scheme.name(), sw.var.tag(), sanitize(label)),
                _ => scheme.name().to_string(),
            };
            out.push(Job {
                name,
                scheme,
                point: point.clone(),
            });
        }
    }
    out
}

fn run_job(job: &Job, base: &BcdConfig) -> JobResult {
    let cfg = BcdConfig {
        scheme: job.scheme,
        ..base.clone()
    };
    let scen = &job.point.scenario;
    let initial_bits = initialize(scen, job.scheme)
        .and_then(|(t, p)| objective(&t, &p, scen))
        .map(nats_to_bits)
        .unwrap_or(f64::NAN);
    JobResult {
        job: job.clone(),
        initial_bits,
        outcome: bcd_run(scen, &cfg),
    }
}

/// Runs every job on up to `threads` workers. Each run is single-threaded,
/// so results do not depend on the worker count.
pub fn execute(jobs: &[Job], cfg: &BcdConfig, threads: usize, progress: bool) -> Vec<JobResult> {
    let next = AtomicUsize::new(0);
    let results: Vec<Mutex<Option<JobResult>>> = jobs.iter().map(|_| Mutex::new(None)).collect();
    let workers = threads.clamp(1, jobs.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else { break };
                let res = run_job(job, cfg);
                if progress {
                    match &res.outcome {
                        Ok(r) => eprintln!(
                            "{}: {:.4} bits/s/Hz, {} outer iterations",
                            job.name, r.secrecy_rate_bits, r.outer_iterations
                        ),
                        Err(e) => eprintln!("{}: failed: {e}", job.name),
                    }
                }
                *results[i].lock().expect("result slot") = Some(res);
            });
        }
    });
    results
        .into_iter()
        .map(|m| m.into_inner().expect("result slot").expect("every job ran"))
        .collect()
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Dimension { .. } => "dimension",
        Error::InvalidScenario(_) => "invalid_scenario",
        Error::InfeasibleScenario(_) => "infeasible_scenario",
        Error::NonFinite(_) => "non_finite",
        Error::Convergence { .. } => "convergence",
        Error::InfeasibleSurrogate { .. } => "infeasible_surrogate",
    }
}

/// Files written by [`write_outputs`].
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub summary: PathBuf,
    pub traces: Vec<PathBuf>,
    pub trajectories: Vec<PathBuf>,
    pub errors: Option<PathBuf>,
}

/// Writes `summary.csv`, `trace_<run>.csv` and `traj_<run>.csv` for every
/// successful run and `error.csv` when any run failed.
pub fn write_outputs(spec: &ExperimentSpec, results: &[JobResult], dir: &Path) -> io::Result<Artifacts> {
    fs::create_dir_all(dir)?;
    let mut art = Artifacts {
        summary: dir.join("summary.csv"),
        ..Artifacts::default()
    };
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for res in results {
        match &res.outcome {
            Ok(report) => {
                let trace = dir.join(format!("trace_{}.csv", res.job.name));
                write_trace(&trace, res.initial_bits, report)?;
                let traj = dir.join(format!("traj_{}.csv", res.job.name));
                write_trajectory(&traj, &report.trajectory, &report.plan)?;
                art.traces.push(trace);
                art.trajectories.push(traj);
                rows.push(SummaryRow {
                    run: &res.job.name,
                    scheme: res.job.scheme.name(),
                    sweep: spec
                        .sweep
                        .as_ref()
                        .zip(res.job.point.label.as_deref())
                        .map(|(sw, label)| (sw.var.key(), label)),
                    report,
                });
            }
            Err(e) => errors.push((res.job.name.clone(), error_kind(e).to_string(), e.to_string())),
        }
    }
    write_summary(&art.summary, &rows, !spec.deterministic)?;
    if !errors.is_empty() {
        let path = dir.join("error.csv");
        write_errors(&path, &errors)?;
        art.errors = Some(path);
    }
    Ok(art)
}
