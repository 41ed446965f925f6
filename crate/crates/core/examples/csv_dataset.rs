//! Ingest a CSV dataset, split by target percentile, and standardize
//! features with train-split statistics only.
//!
//! ```bash
//! cargo run --release -p anchor-risk --example csv_dataset
//! ```

use std::fs;

use anchor_risk::benchmarks::{split_targets, SplitMode, SplitSpec};
use anchor_risk::dataset::{load_csv, Standardizer};
use anchor_risk::nn::{Activation, MlpSpec};
use anchor_risk::stats;
use anchor_risk::train::{train_anchored, TrainConfig};

fn main() -> anchor_risk::Result<()> {
    // A small synthetic table standing in for a real export; one row has a
    // missing cell and is dropped with a diagnostic.
    let mut csv = String::from("rpm,load,temp\n");
    for i in 0..200 {
        let rpm = 800.0 + 12.0 * i as f64;
        let load = 0.2 + 0.003 * i as f64;
        let temp = 60.0 + 0.02 * rpm * load;
        csv.push_str(&format!("{rpm},{load:.3},{temp:.3}\n"));
    }
    csv.push_str("2000,,80.0\n");
    let path = std::env::temp_dir().join("anchor_risk_example.csv");
    fs::write(&path, csv)?;

    let load = load_csv(&path, "temp")?;
    println!(
        "loaded {} rows x {} features (skipped lines: {:?})",
        load.dataset.len(),
        load.dataset.dim(),
        load.skipped_lines
    );

    let split = SplitSpec {
        mode: SplitMode::Gaps {
            low_pct: 30.0,
            high_pct: 60.0,
        },
        seed: 0,
    };
    let (raw_train, raw_test) = split_targets(&load.dataset, &split)?;

    // Fit scaling on the train split alone, then apply it to both sides.
    let standardizer = Standardizer::fit(raw_train.features())?;
    let train = raw_train.with_features(standardizer.transform(raw_train.features())?)?;
    let test = raw_test.with_features(standardizer.transform(raw_test.features())?)?;
    let first_col: Vec<f64> = train.features().row_iter().map(|r| r[0]).collect();
    println!(
        "train rows {}, first feature mean {:.2e} (z-scored)",
        train.len(),
        stats::mean(&first_col)
    );

    let spec = MlpSpec {
        input_dim: 2 * train.dim(),
        hidden_dims: vec![32, 32],
        output_dim: 1,
        activation: Activation::Relu,
        seed: 7,
    };
    let cfg = TrainConfig {
        epochs: 400,
        batch_size: 32,
        learning_rate: 3e-3,
        seed: 8,
        ..TrainConfig::default()
    };
    let (_, log) = train_anchored(&train, spec, &cfg)?;
    println!(
        "trained on standardized features: final loss {:.4} ({} held-out rows for evaluation)",
        log.epoch_loss.last().unwrap(),
        test.len()
    );

    fs::remove_file(&path).ok();
    Ok(())
}
