use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::LevelFilter;
use ma_mesh::{max_corner_distance, read_mesh_csv, run_experiment, sweep_status, CliError, CliResult, ExperimentConfig};

/// Monge-Ampere mesh redistribution on the doubly periodic unit square.
#[derive(Parser)]
#[command(name = "ma-mesh", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every entry of an experiment config and write CSV/VTK output.
    Run {
        config: PathBuf,
        /// Output directory (overrides `out_dir` in the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Number of sweep entries solved concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Print the largest corner distance between two mesh CSV files.
    Compare { a: PathBuf, b: PathBuf },
}

fn init_logging() -> CliResult<()> {
    let level = match std::env::var("MA_MESH_LOG").as_deref() {
        Err(_) | Ok("info") => LevelFilter::Info,
        Ok("quiet") => LevelFilter::Off,
        Ok("debug") => LevelFilter::Debug,
        Ok(other) => return Err(CliError::LogLevel(other.to_string())),
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    Ok(())
}

fn execute(cli: Cli) -> CliResult<u8> {
    init_logging()?;
    match cli.command {
        Command::Run { config, out, jobs } => {
            let exp = ExperimentConfig::load(&config)?;
            let dir = out.unwrap_or_else(|| exp.out_dir.clone());
            let rows = run_experiment(&exp, &dir, jobs)?;
            let ok = rows.iter().filter(|r| r.converged).count();
            log::info!("{ok} of {} runs converged; summary in {}", rows.len(), dir.join("summary.csv").display());
            Ok(sweep_status(&rows))
        }
        Command::Compare { a, b } => {
            let d = max_corner_distance(&read_mesh_csv(&a)?, &read_mesh_csv(&b)?)?;
            println!("{d:.16e}");
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("ma-mesh: {e}");
            ExitCode::from(2)
        }
    }
}
