use std::path::PathBuf;
use std::process::ExitCode;

use bvm_cli::commands::{self, RunOptions, SweepAxes};
use bvm_cli::{CliError, Format};
use bvm_core::reproduce::ExampleId;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bvm", version, about = "Bayesian validation metric: agreement probabilities, ratios and sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct RunFlags {
    /// Override the estimator seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the Monte Carlo sample count.
    #[arg(long)]
    samples: Option<usize>,
    /// Write results here instead of stdout (a directory for sweeps).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl From<RunFlags> for RunOptions {
    fn from(f: RunFlags) -> Self {
        RunOptions {
            seed: f.seed,
            samples: f.samples,
            out: f.out,
            format: f.format,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Estimate P(A|M,D,B) for one scenario.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// BVM factor and ratio between two models under the same rule.
    Ratio {
        /// Model config, then the alternative model's config.
        #[arg(long, num_args = 1, required = true)]
        config: Vec<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        prior: f64,
        #[arg(long, default_value_t = 1.0)]
        prior_alt: f64,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// (γ, ε) sweep for one or two models, with the averaged-Boolean ratio.
    Sweep {
        #[arg(long, num_args = 1, required = true)]
        config: Vec<PathBuf>,
        /// Axis as start:stop:step.
        #[arg(long, default_value = "0.75:1:0.01")]
        gamma: String,
        #[arg(long, default_value = "0:1:0.01")]
        epsilon: String,
        /// Outlier multiple; defaults to the config's gamma_epsilon rule.
        #[arg(long)]
        m: Option<f64>,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Run a built-in worked example and check it against its published values.
    Reproduce {
        /// ex-5.1, ex-5.2 or ex-5.3
        example: ExampleId,
        #[arg(long, default_value_t = bvm_cli::builtin::BUILTIN_SEED)]
        seed: u64,
        /// Directory for CSV tables and the run record.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("BVM_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::config("BVM_THREADS", format!("{v:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::config("BVM_THREADS", e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    match cli.command {
        Command::Validate { config, flags } => {
            commands::validate(&config, &flags.into())?;
        }
        Command::Ratio {
            config,
            prior,
            prior_alt,
            flags,
        } => {
            commands::ratio(&config, prior, prior_alt, &flags.into())?;
        }
        Command::Sweep {
            config,
            gamma,
            epsilon,
            m,
            flags,
        } => {
            let axes = SweepAxes { gamma, epsilon, m };
            commands::run_sweep(&config, &axes, &flags.into())?;
        }
        Command::Reproduce { example, seed, out } => {
            commands::run_reproduce(example, seed, out.as_deref())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
