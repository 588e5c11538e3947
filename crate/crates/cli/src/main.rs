//! `surfnet` command-line driver. Each subcommand runs one pipeline stage
//! and writes its artifacts, the resolved config and a manifest into the
//! output directory.

mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "surfnet", version, about = "Surface-code communication compiler and simulators")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub cmd: Command,
}

#[derive(Args, Debug)]
pub struct Common {
    /// JSON config file; defaults to $SURFNET_CONFIG when set.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override one config value by dotted path, e.g. `estimator.seed=3`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub set: Vec<String>,
    /// Seed for synthesis, placement and workload families.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct Distance {
    /// Physical error rate; sets the code distance from the circuit size.
    #[arg(long, default_value_t = 1e-8)]
    pub pp: f64,
    /// Fixed code distance, overriding `--pp`.
    #[arg(long)]
    pub d: Option<u32>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse a circuit and write its dependency DAG and parallelism profile.
    Parse {
        #[arg(long)]
        circuit: PathBuf,
    },
    /// Generate a synthetic workload.
    Synth {
        #[arg(long)]
        qubits: usize,
        #[arg(long)]
        ops: usize,
        #[arg(long)]
        parallelism: f64,
        #[arg(long, default_value_t = 0.1)]
        t_fraction: f64,
    },
    /// Place a circuit onto a double-defect tile grid.
    Place {
        #[arg(long)]
        circuit: PathBuf,
        /// Policy whose layout rule to use (0-2 naive, 3-6 optimized).
        #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u8).range(0..=6))]
        policy: u8,
        #[command(flatten)]
        distance: Distance,
    },
    /// Simulate braiding under one policy.
    Braid {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u8).range(0..=6))]
        policy: u8,
        #[command(flatten)]
        distance: Distance,
    },
    /// Schedule teleportation and sweep the EPR prefetch window.
    Teleport {
        #[arg(long)]
        circuit: PathBuf,
        /// Windows to sweep, e.g. `0,8,32,inf`; defaults to the configured list.
        #[arg(long, value_delimiter = ',')]
        window: Vec<surfnet::teleport::Window>,
        #[command(flatten)]
        distance: Distance,
    },
    /// Physical qubits and run time of a circuit on both encodings.
    Estimate {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        pp: f64,
    },
    /// Locate the double-defect/planar cross-over of each workload family.
    Crossover {
        #[arg(long, default_value_t = 1e-8)]
        pp: f64,
        /// Restrict to one configured family.
        #[arg(long)]
        family: Option<String>,
    },
    /// Cross-over boundaries over the configured error-rate grid.
    Sweep {
        /// Worker threads for independent cells.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run::execute(&cli) {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
