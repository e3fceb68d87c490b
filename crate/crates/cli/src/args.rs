use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use twochoice::StreamFactory;

use crate::report::Format;

#[derive(Debug, Parser)]
#[command(name = "twochoice", version, about = "Optimal one- and two-choice stopping: limits, dynamic programming and simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Report file; standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Limiting constants for a list of α.
    Table1 {
        /// Defaults to the 19 reference values.
        #[arg(long, value_delimiter = ',', value_parser = positive_f64)]
        alphas: Vec<f64>,

        /// Add the absolute deviation from the printed values and require it below 2e-3.
        #[arg(long)]
        diff: bool,
    },
    /// Finite-n dynamic programming trace with the scaled residual bounds.
    Converge {
        #[arg(long, default_value_t = 1.0, value_parser = positive_f64)]
        alpha: f64,
        #[arg(long, default_value_t = 10_000, value_parser = at_least_two)]
        n: usize,
        #[arg(long, default_value_t = 8192, value_parser = positive_usize)]
        grid_size: usize,
    },
    /// Lower and upper recursions around W_n.
    Sandwich {
        #[arg(long, default_value_t = 1.0, value_parser = positive_f64)]
        alpha: f64,
        #[arg(long, default_value_t = 5000, value_parser = at_least_two)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_value = "32,64", value_parser = positive_usize)]
        js: Vec<usize>,
        #[arg(long, default_value_t = 8192, value_parser = positive_usize)]
        grid_size: usize,
    },
    /// Monte Carlo evaluation of the optimal rules against their exact values.
    Simulate {
        #[arg(long, default_value_t = 1.0, value_parser = positive_f64)]
        alpha: f64,
        #[arg(long, default_value_t = 200, value_parser = at_least_two)]
        n: usize,
        #[arg(long, default_value_t = 100_000, value_parser = positive_usize)]
        trials: usize,
        #[arg(long, default_value_t = StreamFactory::DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 4096, value_parser = positive_usize)]
        grid_size: usize,
        /// Also estimate the r-th scaled moment.
        #[arg(long, value_parser = positive_f64)]
        r: Option<f64>,
        /// Largest accepted |mean − exact| in standard errors.
        #[arg(long, default_value_t = 4.0, value_parser = positive_f64)]
        z_max: f64,
    },
    /// Scaled moment recursion of the one-choice rule.
    Moments {
        #[arg(long, default_value_t = 1.0, value_parser = positive_f64)]
        alpha: f64,
        #[arg(long, value_parser = positive_f64)]
        r: f64,
        #[arg(long, default_value_t = 100_000, value_parser = at_least_two)]
        n: usize,
        /// Start of the classification window.
        #[arg(long, default_value_t = 1000, value_parser = at_least_two)]
        from: usize,
        /// Fail unless the diagnosis matches.
        #[arg(long)]
        expect: Option<Behavior>,
    },
    /// Distance of the tabulated quantities to their α → 0 or α → ∞ limits.
    Asymptote {
        #[arg(long, value_enum)]
        direction: DirectionArg,
        /// Defaults to a ladder of the reference values in the chosen direction.
        #[arg(long, value_delimiter = ',', value_parser = positive_f64)]
        alphas: Vec<f64>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Behavior {
    Bounded,
    Divergent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum DirectionArg {
    ToZero,
    ToInfinity,
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("must be positive and finite, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

fn positive_usize(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be positive".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

fn at_least_two(s: &str) -> Result<usize, String> {
    match positive_usize(s)? {
        1 => Err("must be at least 2".into()),
        v => Ok(v),
    }
}
