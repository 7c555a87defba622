use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use uavsec_cli::{exit, presets, Overrides, Severity};

#[derive(Parser)]
#[command(name = "uavsec", version, about = "Secrecy-rate trajectory and power planning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment file (or a preset by name).
    Run {
        spec: String,
        /// Output directory, overriding `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for sweep points [default: $UAVSEC_THREADS or 1].
        #[arg(long)]
        threads: Option<usize>,
        /// Leave wall-clock columns empty so outputs are byte-stable.
        #[arg(long)]
        deterministic: bool,
        /// Do not print per-run progress.
        #[arg(long, short)]
        quiet: bool,
    },
    /// Check an experiment file without running any solver.
    Validate { spec: String },
    /// Built-in experiment files.
    Presets {
        #[command(subcommand)]
        command: PresetCommand,
    },
}

#[derive(Subcommand)]
enum PresetCommand {
    /// List preset names.
    List,
    /// Print a preset.
    Show { name: String },
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(c as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            spec,
            out,
            threads,
            deterministic,
            quiet,
        } => {
            let ov = Overrides {
                output_dir: out,
                threads,
                deterministic,
                quiet,
            };
            match uavsec_cli::load(&spec).and_then(|text| uavsec_cli::run_text(&text, &ov)) {
                Ok(art) => {
                    println!("wrote {}", art.summary.display());
                    code(exit::OK)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    code(e.exit_code())
                }
            }
        }
        Command::Validate { spec } => {
            let text = match uavsec_cli::load(&spec) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: {e}");
                    return code(e.exit_code());
                }
            };
            let cfg = match uavsec_cli::ConfigFile::parse(&text) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return code(exit::CONFIG);
                }
            };
            let lint = uavsec_cli::lint(&cfg);
            for f in &lint.findings {
                println!("{f}");
            }
            if lint.findings.iter().any(|f| f.severity == Severity::Error) {
                code(exit::CONFIG)
            } else {
                println!("ok");
                code(exit::OK)
            }
        }
        Command::Presets { command } => match command {
            PresetCommand::List => {
                for (name, text) in presets::PRESETS {
                    println!("{name:<8} {}", presets::description(text));
                }
                code(exit::OK)
            }
            PresetCommand::Show { name } => match presets::preset(&name) {
                Some(text) => {
                    print!("{text}");
                    code(exit::OK)
                }
                None => {
                    eprintln!("error: no preset named `{name}`");
                    code(exit::CONFIG)
                }
            },
        },
    }
}
