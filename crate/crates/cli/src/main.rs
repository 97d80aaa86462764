use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use simopt_cli::ablate::cmd_ablate;
use simopt_cli::config::{load_run_config, Overrides};
use simopt_cli::runner::cmd_optimize;
use simopt_cli::simulate::{cmd_simulate, SimulateArgs};
use simopt_cli::warmdb;
use simopt_cli::CliError;

/// Couples population-based optimizers (GA, DE, PSO) to blockchain network
/// simulators, with warm starting from prior solutions and concurrent
/// candidate evaluation.
#[derive(Parser)]
#[command(name = "simopt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one optimization described by a config file.
    Optimize {
        #[arg(long)]
        config: PathBuf,
        /// Override the config file's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the worker count (1 disables concurrent evaluation).
        #[arg(long)]
        workers: Option<usize>,
        /// Override the warm-start database path.
        #[arg(long)]
        warmstart_db: Option<PathBuf>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the warm-start x concurrency ablation grid for DE, GA and PSO.
    Ablate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// How many times to repeat the grid with consecutive seeds.
        #[arg(long, default_value_t = 1)]
        replications: usize,
    },
    /// Run the built-in blockchain simulator once; metrics go to stdout.
    Simulate(SimulateArgs),
    /// Inspect or maintain a warm-start database.
    #[command(name = "warmstart-db")]
    WarmstartDb {
        #[arg(long)]
        warmstart_db: PathBuf,
        #[command(subcommand)]
        action: DbAction,
    },
}

#[derive(Subcommand)]
enum DbAction {
    /// Print all records, scored against a config's space when given.
    List {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Drop records dominated within their objective signature.
    Prune,
    /// Merge records from another store file.
    Import {
        #[arg(long)]
        input: PathBuf,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Optimize {
            config,
            seed,
            workers,
            warmstart_db,
            out,
        } => {
            let cfg = load_run_config(
                &config,
                &Overrides {
                    seed,
                    workers,
                    warmstart_db,
                    out,
                },
            )?;
            let (outcome, out_dir) = cmd_optimize(&cfg)?;
            println!(
                "{}: converged={} best_u={} artifacts in {}",
                cfg.optimizer.algorithm,
                outcome.report.converged,
                outcome.report.best_u,
                out_dir.display()
            );
            Ok(())
        }
        Command::Ablate {
            config,
            seed,
            workers,
            out,
            replications,
        } => {
            let cfg = load_run_config(
                &config,
                &Overrides {
                    seed,
                    workers,
                    warmstart_db: None,
                    out,
                },
            )?;
            cmd_ablate(&cfg, replications)?;
            Ok(())
        }
        Command::Simulate(args) => {
            print!("{}", cmd_simulate(&args)?);
            Ok(())
        }
        Command::WarmstartDb {
            warmstart_db,
            action,
        } => {
            let text = match action {
                DbAction::List { config } => warmdb::cmd_list(&warmstart_db, config.as_deref())?,
                DbAction::Prune => warmdb::cmd_prune(&warmstart_db)?,
                DbAction::Import { input } => warmdb::cmd_import(&warmstart_db, &input)?,
            };
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        // Bad flags are configuration mistakes, not runtime failures.
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
