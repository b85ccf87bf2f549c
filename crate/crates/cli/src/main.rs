use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fronttrack_cli::runner::{self, convergence_study, run_scenario};
use fronttrack_cli::scenario::{build_scenario, builtin_names, load_scenario};

/// Front-tracking solver for 1-D hyperbolic initial-boundary value
/// problems with a moving boundary and an optional non-local source.
#[derive(Parser)]
#[command(name = "fronttrack", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a scenario without running it.
    Validate {
        /// Scenario file, or `builtin:<name>`.
        #[arg(long)]
        scenario: String,
    },
    /// Run a scenario and write its artifact bundle.
    Run {
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Extra snapshot times, comma separated.
        #[arg(long, value_delimiter = ',')]
        snapshots: Vec<f64>,
        /// Event budget override.
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Run several scenarios in parallel.
    Sweep {
        /// Scenario files or `builtin:<name>` entries.
        #[arg(long, num_args = 1.., value_delimiter = ',')]
        scenario: Vec<String>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 4)]
        jobs: usize,
    },
    /// Convergence study over an accuracy grid.
    Study {
        #[arg(long)]
        scenario: String,
        /// Accuracy grid, comma separated, at least three values.
        #[arg(long, value_delimiter = ',')]
        eps: Vec<f64>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// List the built-in scenarios.
    List,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(ok) => {
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<bool, fronttrack_cli::CliError> {
    match cli.command {
        Command::Validate { scenario } => {
            let sc = load_scenario(&scenario)?;
            build_scenario(&sc)?;
            println!("scenario `{}` is valid", if sc.name.is_empty() { &scenario } else { &sc.name });
            Ok(true)
        }
        Command::Run { scenario, out_dir, snapshots, budget } => {
            let sc = load_scenario(&scenario)?;
            let mut built = build_scenario(&sc)?;
            if !snapshots.is_empty() {
                built.snapshots = snapshots;
            }
            if let Some(b) = budget {
                built.params.event_budget = b;
            }
            let arts = run_scenario(&built, Some(&out_dir))?;
            print!("{}", runner::format_summary(&arts.summary));
            println!("artifacts in {}", out_dir.display());
            Ok(arts.summary.ok)
        }
        Command::Sweep { scenario, out_dir, jobs } => {
            let summaries = runner::sweep(&scenario, &out_dir, jobs)?;
            let mut all_ok = true;
            for s in &summaries {
                print!("{}", runner::format_summary(s));
                all_ok &= s.ok;
            }
            Ok(all_ok)
        }
        Command::Study { scenario, eps, out_dir } => {
            let sc = load_scenario(&scenario)?;
            let rows = convergence_study(&sc, &eps, Some(&out_dir))?;
            println!("epsilon        distance       ratio");
            for r in &rows {
                println!(
                    "{:<14} {:<14} {}",
                    r.epsilon,
                    r.distance_to_previous.map_or("-".into(), |d| format!("{d:.6e}")),
                    r.ratio.map_or("-".into(), |d| format!("{d:.3}")),
                );
            }
            Ok(true)
        }
        Command::List => {
            for n in builtin_names() {
                println!("builtin:{n}");
            }
            Ok(true)
        }
    }
}
