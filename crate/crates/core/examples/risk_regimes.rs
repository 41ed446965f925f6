//! The full failure-characterization loop in memory: train, score, bin
//! both channels, assign the four risk regimes, and evaluate the detector.
//!
//! ```bash
//! cargo run --release -p anchor-risk --example risk_regimes
//! ```

use anchor_risk::benchmarks::{gen_function, make_eval_grid, split_targets, BenchmarkFn, SplitMode, SplitSpec};
use anchor_risk::metrics::{evaluate, RiskRecord};
use anchor_risk::nn::{Activation, MlpSpec};
use anchor_risk::nonconformity::{score1, AnchorBatch};
use anchor_risk::regimes::{assign_regimes, Regime, RegimeOptions};
use anchor_risk::stats;
use anchor_risk::train::{train_anchored, TrainConfig};
use anchor_risk::uncertainty::{forward_uncertainty_batch, AnchorSet, UqConfig};

fn main() -> anchor_risk::Result<()> {
    let pool = gen_function(BenchmarkFn::F2, 400, None, 1)?;
    let split = SplitSpec {
        mode: SplitMode::gaps_default(),
        seed: 1,
    };
    let (train, _) = split_targets(&pool, &split)?;
    let grid = make_eval_grid(BenchmarkFn::F2, 200)?;

    let spec = MlpSpec {
        input_dim: 2,
        hidden_dims: vec![64, 64],
        output_dim: 1,
        activation: Activation::Relu,
        seed: 1001,
    };
    let cfg = TrainConfig {
        epochs: 1000,
        batch_size: 32,
        learning_rate: 3e-3,
        seed: 1002,
        ..TrainConfig::default()
    };
    let (model, _) = train_anchored(&train, spec, &cfg)?;

    let anchors = AnchorSet::draw(train.features(), &UqConfig { anchors: 10, seed: 1003 })?;
    let estimates = forward_uncertainty_batch(&model, grid.features(), &anchors)?;
    let batch = AnchorBatch::draw(&train, 100, 1004)?;

    let sigmas: Vec<f64> = estimates.iter().map(|e| e.sigma).collect();
    let mncs: Vec<f64> = grid
        .features()
        .row_iter()
        .map(|x| score1(&model, x, &batch).map(|s| s.value))
        .collect::<anchor_risk::Result<_>>()?;

    let assignments = assign_regimes(&sigmas, &mncs, &RegimeOptions::default())?;
    let records: Vec<RiskRecord> = assignments
        .iter()
        .zip(estimates.iter().zip(grid.targets()))
        .map(|(a, (est, &y))| RiskRecord::new(a.sample, a.regime, (y - est.mu).abs()))
        .collect::<anchor_risk::Result<_>>()?;

    // Per-regime composition and observed risk.
    for regime in [Regime::Id, Regime::LowRisk, Regime::ModerateRisk, Regime::HighRisk] {
        let risks: Vec<f64> = records
            .iter()
            .filter(|r| r.regime == regime)
            .map(|r| r.true_risk)
            .collect();
        if risks.is_empty() {
            println!("{:>8}: empty", regime.label());
        } else {
            println!(
                "{:>8}: {:>3} samples, mean |error| {:.4}",
                regime.label(),
                risks.len(),
                stats::mean(&risks)
            );
        }
    }

    let report = evaluate(&records)?;
    println!(
        "detector: FN {:.2}%  FP {:.2}%  C_low {:?}  C_high {:?}",
        report.fn_pct, report.fp_pct, report.c_low, report.c_high
    );
    for warning in &report.warnings {
        println!("warning: {warning}");
    }
    Ok(())
}
