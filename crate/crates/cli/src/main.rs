use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use landmark_emotion::persist::{load_model, save_model};
use landmark_emotion_cli::config::PipelineConfig;
use landmark_emotion_cli::manifest::Split;
use landmark_emotion_cli::pipeline::{self, Report};
use landmark_emotion_cli::synth::{synth_dataset, SynthOptions};
use landmark_emotion_cli::CliError;

#[derive(Parser)]
#[command(name = "landmark-emotion", version, about = "Emotion recognition from facial landmarks")]
struct Cli {
    /// Pipeline configuration file (key = value lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Model file to write (train) or read (evaluate, predict, influence).
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    /// Output path: a directory for synth, a report file otherwise.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Random seed (synth); recorded in the config for other commands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Config override, `key=value`; may be repeated.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model on the train split, tuning on the validate split.
    Train,
    /// Confusion matrix and accuracy of a model on one split.
    Evaluate {
        #[arg(long, default_value = "test")]
        split: Split,
    },
    /// Print `id<TAB>label` for one split.
    Predict {
        #[arg(long, default_value = "test")]
        split: Split,
    },
    /// Rank landmark-pair distances by boosted-tree influence.
    Influence {
        #[arg(long)]
        top_k: Option<usize>,
    },
    /// Generate a synthetic labeled dataset.
    Synth {
        #[arg(long, default_value_t = 30)]
        per_class: usize,
        /// Also render grayscale PGM images.
        #[arg(long)]
        images: bool,
    },
    /// Print the full hyperparameter curve on the validate split.
    Gridsearch,
}

fn require<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
    value
        .as_deref()
        .ok_or_else(|| CliError::Usage(format!("missing required flag --{flag}")))
}

fn load_config(cli: &Cli, required: bool) -> Result<PipelineConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None if required => return Err(CliError::Usage("missing required flag --config".into())),
        None => PipelineConfig::default(),
    };
    for setting in &cli.overrides {
        config.apply_override(setting)?;
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn emit(report: &Report, out: Option<&Path>) -> anyhow::Result<()> {
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    match out {
        Some(path) => pipeline::write_text(path, &report.text)?,
        None => print!("{}", report.text),
    }
    Ok(())
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Train => {
            let config = load_config(cli, true)?;
            let path = require(&cli.model, "model")?;
            let (model, report) = pipeline::train(&config)?;
            save_model(path, &model).with_context(|| format!("writing {}", path.display()))?;
            emit(&report, cli.out.as_deref())?;
        }
        Command::Evaluate { split } => {
            let config = load_config(cli, true)?;
            let model = load_model(require(&cli.model, "model")?)?;
            let (evaluation, report) = pipeline::evaluate(&config, &model, *split)?;
            emit(&report, None)?;
            if let Some(out) = &cli.out {
                let json = serde_json::to_string_pretty(&evaluation)? + "\n";
                pipeline::write_text(out, &json)?;
            }
        }
        Command::Predict { split } => {
            let config = load_config(cli, true)?;
            let model = load_model(require(&cli.model, "model")?)?;
            emit(&pipeline::predict(&config, &model, *split)?, cli.out.as_deref())?;
        }
        Command::Influence { top_k } => {
            let config = load_config(cli, false)?;
            let model = load_model(require(&cli.model, "model")?)?;
            let k = top_k.unwrap_or(config.influence_top_k);
            emit(&pipeline::influence(&model, k)?, cli.out.as_deref())?;
        }
        Command::Synth { per_class, images } => {
            let out = require(&cli.out, "out")?;
            let options = SynthOptions {
                seed: cli.seed.unwrap_or(0),
                per_class: *per_class,
                images: *images,
                ..SynthOptions::default()
            };
            let manifest = synth_dataset(out, &options)?;
            println!("wrote {} samples to {}", manifest.entries.len(), out.display());
        }
        Command::Gridsearch => {
            let config = load_config(cli, true)?;
            emit(&pipeline::gridsearch(&config)?, cli.out.as_deref())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            match err.downcast_ref::<CliError>() {
                Some(CliError::Usage(_)) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
