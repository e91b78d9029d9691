//! `coexist`: codebook design, satellite tracking, scenario runs and metric
//! post-processing.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 domain error
//! (infeasible codebook, TLE parse failure, missing run manifest, ...).

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "coexist", version, about = "Terrestrial / LEO satellite coexistence simulator")]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Design the null-steering codebook tensor.
    DesignCodebook {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Accepted for uniformity; the design is deterministic.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compute satellite look-angle tracks for a ground station.
    Track {
        #[arg(long)]
        config: PathBuf,
        /// TLE file (default: bundled sample constellation).
        #[arg(long)]
        tle: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the Monte-Carlo scenario.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed of the config file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// CDF tables and summaries of a completed run.
    Analyze {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be >= 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::DesignCodebook { config, out, seed: _ } => commands::design_codebook(&config, &out),
        Command::Track { config, tle, out } => commands::track(&config, tle.as_deref(), &out),
        Command::Simulate { config, seed, out } => commands::simulate(&config, seed, &out),
        Command::Analyze { input, out } => commands::analyze(&input, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e.error);
            ExitCode::from(e.code)
        }
    }
}
