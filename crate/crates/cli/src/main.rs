use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use chpoisson_cli::error::ConfigError;
use chpoisson_cli::report::Report;
use chpoisson_cli::{catalog, execute, load, Overrides};
use clap::{Parser, Subcommand, ValueEnum};

/// Verify controlled Hamiltonian systems on Poisson manifolds from JSON scenarios.
#[derive(Parser)]
#[command(name = "pch", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect the built-in scenarios.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
    /// Run a scenario file or `catalog:<name>`.
    Run {
        source: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Sample count for every check.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        fd_step: Option<f64>,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Directory for per-check trajectory CSVs of simulation checks.
        #[arg(long)]
        trajectories: Option<PathBuf>,
    },
    /// Convert a saved JSON report.
    Export {
        report: PathBuf,
        #[arg(long, value_enum)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CatalogAction {
    /// Print the names of the built-in scenarios.
    List,
    /// Print one built-in scenario.
    Show { name: String },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn config_failure(errors: &[ConfigError]) -> ExitCode {
    for e in errors {
        eprintln!("error: {e}");
    }
    ExitCode::from(EXIT_CONFIG)
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), ConfigError> {
    match out {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| ConfigError::new("", format!("cannot write {}: {e}", p.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Catalog { action } => match action {
            CatalogAction::List => {
                for name in catalog::names() {
                    println!("{name}");
                }
                ExitCode::SUCCESS
            }
            CatalogAction::Show { name } => match catalog::text(&name) {
                Some(t) => {
                    print!("{t}");
                    ExitCode::SUCCESS
                }
                None => config_failure(&[ConfigError::new("", format!("unknown catalog entry `{name}`"))]),
            },
        },
        Command::Run {
            source,
            seed,
            samples,
            tol,
            fd_step,
            out,
            format,
            trajectories,
        } => {
            let mut scenario = match load(&source) {
                Ok(s) => s,
                Err(e) => return config_failure(&e),
            };
            Overrides {
                seed,
                samples,
                tol,
                fd_step,
            }
            .apply(&mut scenario);
            let started = Instant::now();
            let output = match execute(&scenario) {
                Ok(o) => o,
                Err(e) => return config_failure(&e),
            };
            // Wall time stays out of the report so reports are byte-stable.
            eprintln!("wall_time_s: {:.3}", started.elapsed().as_secs_f64());
            if let Some(dir) = trajectories {
                if let Err(e) = std::fs::create_dir_all(&dir) {
                    return config_failure(&[ConfigError::new("", format!("cannot create {}: {e}", dir.display()))]);
                }
                for (id, csv) in &output.trajectories {
                    if let Err(e) = emit(csv, Some(&dir.join(format!("{id}.csv")))) {
                        return config_failure(&[e]);
                    }
                }
            }
            if let Err(e) = emit(&render(&output.report, format), out.as_deref()) {
                return config_failure(&[e]);
            }
            if output.report.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FAIL)
            }
        }
        Command::Export { report, format, out } => {
            let parsed = std::fs::read_to_string(&report)
                .map_err(|e| e.to_string())
                .and_then(|t| serde_json::from_str::<Report>(&t).map_err(|e| e.to_string()));
            match parsed {
                Ok(r) => match emit(&render(&r, format), out.as_deref()) {
                    Ok(()) => ExitCode::SUCCESS,
                    Err(e) => config_failure(&[e]),
                },
                Err(e) => config_failure(&[ConfigError::new("", format!("{}: {e}", report.display()))]),
            }
        }
    }
}
