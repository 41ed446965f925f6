//! Command-line driver around the pipeline stages.
//!
//! Flags override the corresponding config-file values; since stage hashes
//! are computed from the effective config, an override at one stage must be
//! repeated downstream or the artifact is reported stale. Failures print a
//! machine-readable error object to stderr and exit nonzero.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::config::{Ablation, ExperimentConfig};
use crate::error::{Error, Result};
use crate::nonconformity::ScoreKind;
use crate::pipeline;

#[derive(Debug, Parser)]
#[command(
    name = "anchor-risk",
    about = "Risk-regime characterization for anchored regression models",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Path to the experiment config JSON.
    #[arg(long)]
    config: PathBuf,

    /// Override the global seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Override the run output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    /// Non-conformity score to compute.
    #[arg(long, value_parser = parse_score_kind)]
    score: Option<ScoreKind>,

    /// Number of anchors K for the predictive uncertainty.
    #[arg(long)]
    anchors: Option<usize>,

    /// Anchor batch size for the non-conformity scores.
    #[arg(long)]
    anchor_batch: Option<usize>,

    /// Learning rate of the input-movement score's descent.
    #[arg(long)]
    eta: Option<f64>,

    /// Regularizer weight of the input-movement score.
    #[arg(long)]
    lambda: Option<f64>,

    /// Iteration count of the input-movement score.
    #[arg(long)]
    iters: Option<usize>,
}

fn parse_score_kind(raw: &str) -> std::result::Result<ScoreKind, String> {
    match raw {
        "1" | "score1" => Ok(ScoreKind::Score1),
        "2" | "score2" => Ok(ScoreKind::Score2),
        other => Err(format!("unknown score `{other}` (use 1 or 2)")),
    }
}

fn parse_ablation(raw: &str) -> std::result::Result<Ablation, String> {
    match raw {
        "uq-only" => Ok(Ablation::UqOnly),
        "mnc-only" => Ok(Ablation::MncOnly),
        "none" => Ok(Ablation::None),
        other => Err(format!("unknown ablation `{other}` (use uq-only or mnc-only)")),
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate the train/test datasets and manifest.
    Gen {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Train the anchored regressor.
    Train {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Train the anchored autoencoder (needed for score 2).
    TrainAe {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Compute per-sample uncertainties and non-conformity scores.
    Score {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        score: ScoreArgs,
    },
    /// Assign risk regimes and compute the metric suite.
    Evaluate {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        score: ScoreArgs,
        /// Rank a single score channel instead of the full two-channel map.
        #[arg(long, value_parser = parse_ablation)]
        ablation: Option<Ablation>,
        /// Also write the per-sample records as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Consolidate evaluate reports from one or more run directories.
    Report {
        #[command(flatten)]
        common: CommonArgs,
        /// Run directories to consolidate (defaults to the output dir).
        #[arg(long, num_args = 1..)]
        runs: Vec<PathBuf>,
    },
}

fn effective_config(common: &CommonArgs, score: Option<&ScoreArgs>) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(out) = &common.out {
        config.output_dir = out.clone();
    }
    if let Some(args) = score {
        if let Some(kind) = args.score {
            config.score.kind = kind;
        }
        if let Some(anchors) = args.anchors {
            config.uncertainty.anchors = anchors;
        }
        if let Some(batch) = args.anchor_batch {
            config.score.anchor_batch = batch;
        }
        if let Some(eta) = args.eta {
            config.score.eta = eta;
        }
        if let Some(lambda) = args.lambda {
            config.score.lambda = lambda;
        }
        if let Some(iters) = args.iters {
            config.score.iters = iters;
        }
    }
    config.validate()?;
    Ok(config)
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { common } => pipeline::run_gen(&effective_config(&common, None)?),
        Command::Train { common } => pipeline::run_train(&effective_config(&common, None)?),
        Command::TrainAe { common } => pipeline::run_train_ae(&effective_config(&common, None)?),
        Command::Score { common, score } => {
            pipeline::run_score(&effective_config(&common, Some(&score))?)
        }
        Command::Evaluate {
            common,
            score,
            ablation,
            csv,
        } => {
            let config = effective_config(&common, Some(&score))?;
            pipeline::run_evaluate(&config, ablation.unwrap_or_default(), csv.as_deref())?;
            Ok(())
        }
        Command::Report { common, runs } => {
            let config = effective_config(&common, None)?;
            let dirs = if runs.is_empty() {
                vec![config.output_dir.clone()]
            } else {
                runs
            };
            let out = config.output_dir.join(pipeline::SUMMARY_FILE);
            pipeline::run_report(&dirs, &out)?;
            Ok(())
        }
    }
}

fn print_error(err: &Error) {
    let object = json!({
        "error": {
            "kind": err.kind(),
            "message": err.to_string(),
        }
    });
    eprintln!("{object}");
}

/// Parses arguments from the process environment, runs the requested stage,
/// and returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => 0,
        Err(err) => {
            print_error(&err);
            1
        }
    }
}

/// Entry point for tests: run with explicit arguments.
pub fn run_with_args<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)
        .map_err(|e| Error::InvalidConfig(format!("argument error: {e}")))?;
    dispatch(cli)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn score_kind_parses_both_forms() {
        assert_eq!(parse_score_kind("1").unwrap(), ScoreKind::Score1);
        assert_eq!(parse_score_kind("score2").unwrap(), ScoreKind::Score2);
        assert!(parse_score_kind("3").is_err());
    }

    #[test]
    fn ablation_parses() {
        assert_eq!(parse_ablation("uq-only").unwrap(), Ablation::UqOnly);
        assert_eq!(parse_ablation("mnc-only").unwrap(), Ablation::MncOnly);
        assert!(parse_ablation("bogus").is_err());
    }
}
