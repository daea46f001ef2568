//! `symcdg`: experiments on the symmetrized affine process mod p.
//!
//! Every subcommand emits one table, as CSV (default) or as JSON together
//! with the echoed configuration and run metadata.

mod commands;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "symcdg", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Worker threads (results do not depend on this).
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,

    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<std::path::PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IncrementsArg {
    /// Uniform on {1, 0, -1}.
    Trinary,
    /// Uniform on {1, -1}.
    Binary,
}

/// Step law of the process.
#[derive(Debug, Clone, Args, Serialize)]
pub struct ProcessArgs {
    /// Multiplier a; each step uses a or its inverse.
    #[arg(long, default_value_t = 2)]
    pub multiplier: u64,

    /// Probability of multiplying by a rather than its inverse.
    #[arg(long, default_value_t = 0.5)]
    pub forward_prob: f64,

    #[arg(long, value_enum, default_value_t = IncrementsArg::Trinary)]
    pub increments: IncrementsArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WhichArg {
    Alternating,
    AllForward,
    Random,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Exact TV curve of P_n for n = 0..=N.
    Evolve {
        #[arg(long, default_value_t = 1009)]
        p: u64,
        #[arg(long, default_value_t = 100)]
        n: u64,
        /// Also report the Fourier upper bound at every step (O(p²) each).
        #[arg(long)]
        with_bound: bool,
        #[command(flatten)]
        process: ProcessArgs,
    },
    /// Smallest n with TV(P_n, U) < epsilon.
    MixingTime {
        #[arg(long, conflicts_with = "p_grid")]
        p: Option<u64>,
        #[arg(long, value_delimiter = ',')]
        p_grid: Option<Vec<u64>>,
        #[arg(long, default_value_t = 0.25)]
        epsilon: f64,
        #[command(flatten)]
        process: ProcessArgs,
    },
    /// Mixing time against (log2 p)² and log2 p · log2 log2 p over a grid.
    Scaling {
        #[arg(long, value_delimiter = ',')]
        p_grid: Option<Vec<u64>>,
        #[arg(long, default_value_t = 0.25)]
        epsilon: f64,
        #[command(flatten)]
        process: ProcessArgs,
    },
    /// Conditional law for a fixed multiplier sequence.
    Conditional {
        #[arg(long, default_value_t = 1009)]
        p: u64,
        #[arg(long, default_value_t = 100)]
        n: u64,
        #[arg(long, value_enum, default_value_t = WhichArg::Random)]
        which: WhichArg,
        /// First seed for random sequences.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of consecutive seeds for random sequences.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        #[arg(long, default_value_t = symcdg::fourier::DEFAULT_BETA)]
        beta: f64,
        #[command(flatten)]
        process: ProcessArgs,
    },
    /// Interval lower bound on TV from the mass of a^s·X_n near 0.
    LowerBound {
        #[arg(long, default_value_t = 10007)]
        p: u64,
        /// Defaults to floor(0.05·(log2 p)²).
        #[arg(long)]
        n: Option<u64>,
        /// Power of the multiplier applied to X_n; defaults to ceil(0.25·log2 p).
        #[arg(long, allow_hyphen_values = true)]
        shift: Option<i64>,
        /// Defaults to ceil(0.05·√p·(log2 p)²), kept below p/4.
        #[arg(long)]
        half_width: Option<u64>,
        #[command(flatten)]
        process: ProcessArgs,
    },
    /// Alternation histogram of binary windows of m/p and frequency classes
    /// for a simulated exponent walk.
    Census {
        #[arg(long, default_value_t = 1009)]
        p: u64,
        #[arg(long, default_value_t = 0)]
        start: u64,
        /// Window length; defaults to ceil(log2 p) + 2.
        #[arg(long)]
        length: Option<usize>,
        #[arg(long, default_value_t = 1.0 / 9.0)]
        decay: f64,
        #[arg(long, default_value_t = symcdg::fourier::DEFAULT_BETA)]
        beta: f64,
        /// Steps of the simulated walk; defaults to 4·(log2 p)².
        #[arg(long)]
        n: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Exact laws of the running maximum and of returns to 0.
    WalkLaws {
        /// Steps for the running-maximum law.
        #[arg(long, default_value_t = 16)]
        j: u64,
        /// Even step count for the returns law.
        #[arg(long, default_value_t = 16)]
        two_n: u64,
        /// Simulated walks for an empirical maximum law (0 disables).
        #[arg(long, default_value_t = 0)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// TV curve down to a floor, with 0.9/0.5/0.1 crossing times.
    Cutoff {
        #[arg(long, default_value_t = 1009)]
        p: u64,
        #[arg(long, default_value_t = 1e-3)]
        floor: f64,
        #[command(flatten)]
        process: ProcessArgs,
    },
    /// Scaling of the symmetrized chain next to the fixed-multiplier chain.
    CompareFixed {
        #[arg(long, value_delimiter = ',')]
        p_grid: Option<Vec<u64>>,
        #[arg(long, default_value_t = 0.25)]
        epsilon: f64,
    },
    /// Monte Carlo estimate of P_n against the exact law.
    Sample {
        #[arg(long, default_value_t = 101)]
        p: u64,
        #[arg(long, default_value_t = 1000)]
        n: u64,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        process: ProcessArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
