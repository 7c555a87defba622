//! Experiment runner for the UAV secrecy-rate planner: reads flat
//! `key = value` experiment files, runs the schemes over a parameter sweep
//! and writes CSV tables, convergence traces and trajectories.

pub mod config;
pub mod output;
pub mod presets;
pub mod runner;

use std::path::{Path, PathBuf};

pub use config::{lint, ConfigFile, ExperimentSpec, Finding, Lint, Severity};
pub use runner::{execute, jobs, write_outputs, Artifacts, JobResult};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 1;
    pub const SOLVER: i32 = 2;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Parse(#[from] config::ParseError),
    #[error("invalid experiment:\n{}", .0.iter().map(|f| format!("  {f}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Finding>),
    #[error("cannot write results: {0}")]
    Write(#[from] std::io::Error),
    #[error("{failed} of {total} runs failed, see {}", .record.display())]
    Solver { failed: usize, total: usize, record: PathBuf },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Solver { .. } => exit::SOLVER,
            _ => exit::CONFIG,
        }
    }
}

/// Loads an experiment from a file, or from a preset of that name when no
/// such file exists. Returns the text and the default output directory
/// override for presets.
pub fn load(spec: &str) -> Result<String, CliError> {
    let path = Path::new(spec);
    if !path.exists() {
        if let Some(text) = presets::preset(spec) {
            return Ok(text.to_string());
        }
    }
    std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

/// Options given on the command line, overriding the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    pub deterministic: bool,
    pub quiet: bool,
}

/// Parses and lints `text`, returning the spec when there are no errors.
pub fn checked_spec(text: &str) -> Result<ExperimentSpec, CliError> {
    let cfg = ConfigFile::parse(text)?;
    let lint = lint(&cfg);
    match lint.spec {
        Some(spec) => Ok(spec),
        None => Err(CliError::Invalid(lint.errors().cloned().collect())),
    }
}

/// Default worker count: the environment variable, else 1.
pub fn default_threads() -> usize {
    std::env::var(runner::THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(1)
}

/// Runs the experiment in `text`. Nothing is written when the file does
/// not pass the lint.
pub fn run_text(text: &str, ov: &Overrides) -> Result<Artifacts, CliError> {
    let mut spec = checked_spec(text)?;
    if let Some(dir) = &ov.output_dir {
        spec.output_dir = dir.clone();
    }
    spec.deterministic |= ov.deterministic;
    let threads = ov.threads.or(spec.threads).unwrap_or_else(default_threads);
    let jobs = jobs(&spec);
    let results = execute(&jobs, &spec.bcd, threads, !ov.quiet);
    let art = write_outputs(&spec, &results, &spec.output_dir)?;
    let failed = results.iter().filter(|r| r.outcome.is_err()).count();
    match &art.errors {
        Some(record) => Err(CliError::Solver {
            failed,
            total: results.len(),
            record: record.clone(),
        }),
        None => Ok(art),
    }
}
