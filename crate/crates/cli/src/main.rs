//! Command-line entry point.
//!
//! Exit codes: 0 success, 2 config error, 3 missing prerequisite, 4 numeric
//! failure, 1 anything else.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sharpshooter::Method;
use sharpshooter_cli::config::ExperimentConfig;
use sharpshooter_cli::error::CliError;
use sharpshooter_cli::pipeline::{run_command, RunOptions, Verb};

#[derive(Parser)]
#[command(
    name = "sharpshooter",
    version,
    about = "Counterfactual explanations via twin-VAE latent interpolation, with gradient-descent baselines, metrics, and visualization exports"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration file (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory; overrides `output.dir` from the config.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Master seed; overrides every seed in the config.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Comma-separated subset of methods (ss-line,ss-gd,gdi,gdl).
    #[arg(long, global = true, value_delimiter = ',', value_name = "LIST")]
    methods: Option<Vec<String>>,

    /// Worker threads for the explain phase.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate (or ingest) the dataset and write dataset.json.
    GenData,
    /// Train the classifier and both VAEs on the train split.
    Train,
    /// Generate counterfactuals for held-out base samples.
    Explain,
    /// Score all generated counterfactuals with the metric suite.
    Evaluate,
    /// Export decision-boundary, scatter, segment, and trace CSVs.
    Visualize,
    /// Grid-sweep VAE hyperparameters and extract the Pareto front.
    Sweep,
    /// The full pipeline: gen-data, train, explain, evaluate, visualize.
    All,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config_path = cli
        .config
        .ok_or_else(|| CliError::Config("--config <PATH> is required".to_string()))?;
    let config = ExperimentConfig::load(&config_path)?;

    let methods = match cli.methods {
        None => None,
        Some(names) => {
            let mut parsed = Vec::with_capacity(names.len());
            for name in names {
                let method: Method = name
                    .parse()
                    .map_err(|e: sharpshooter::Error| CliError::Config(e.to_string()))?;
                parsed.push(method);
            }
            Some(parsed)
        }
    };

    let verb = match cli.command {
        Command::GenData => Verb::GenData,
        Command::Train => Verb::Train,
        Command::Explain => Verb::Explain,
        Command::Evaluate => Verb::Evaluate,
        Command::Visualize => Verb::Visualize,
        Command::Sweep => Verb::Sweep,
        Command::All => Verb::All,
    };

    let opts = RunOptions {
        out_dir: cli.out,
        seed: cli.seed,
        methods,
        jobs: cli.jobs,
    };
    run_command(verb, &config, &opts)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
