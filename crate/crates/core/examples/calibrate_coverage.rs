//! Post-hoc calibration: scale the predictive sigmas by a split-conformal
//! multiplier so the intervals reach a target coverage on held-out data.
//!
//! ```bash
//! cargo run --release -p anchor-risk --example calibrate_coverage
//! ```

use anchor_risk::benchmarks::{gen_function, split_targets, BenchmarkFn, SplitMode, SplitSpec};
use anchor_risk::nn::{Activation, MlpSpec};
use anchor_risk::train::{train_anchored, TrainConfig};
use anchor_risk::uncertainty::{calibrate_sigma, forward_uncertainty_batch, AnchorSet, UqConfig};

fn main() -> anchor_risk::Result<()> {
    // Train on the lower 70% of targets; the held-out tail plays the role of
    // a calibration set drawn away from the training distribution.
    let pool = gen_function(BenchmarkFn::F3, 700, None, 5)?;
    let split = SplitSpec {
        mode: SplitMode::tails_default(),
        seed: 5,
    };
    let (train, held_out) = split_targets(&pool, &split)?;

    let spec = MlpSpec {
        input_dim: 2,
        hidden_dims: vec![64, 64],
        output_dim: 1,
        activation: Activation::Relu,
        seed: 51,
    };
    let cfg = TrainConfig {
        epochs: 800,
        batch_size: 32,
        learning_rate: 3e-3,
        seed: 52,
        ..TrainConfig::default()
    };
    let (model, _) = train_anchored(&train, spec, &cfg)?;

    let anchors = AnchorSet::draw(train.features(), &UqConfig { anchors: 10, seed: 53 })?;
    let estimates = forward_uncertainty_batch(&model, held_out.features(), &anchors)?;

    let coverage_of = |scale: f64| {
        let covered = estimates
            .iter()
            .zip(held_out.targets())
            .filter(|(e, &y)| (y - e.mu).abs() <= scale * e.sigma)
            .count();
        covered as f64 / estimates.len() as f64
    };

    println!("raw +/- sigma coverage on held-out tail: {:.1}%", 100.0 * coverage_of(1.0));
    let multiplier = calibrate_sigma(&estimates, held_out.targets(), 0.9)?;
    println!("split-conformal multiplier for 90% coverage: {multiplier:.3}");
    println!(
        "coverage with scaled sigma on the same set: {:.1}%",
        100.0 * coverage_of(multiplier)
    );

    // The calibration set can also extend the anchor pool for scoring,
    // giving the non-conformity probes access to labels the model never
    // fit on.
    use anchor_risk::nonconformity::{score1, AnchorBatch};
    let union = train.concat(&held_out, "train+calibration")?;
    let train_batch = AnchorBatch::draw(&train, 100, 54)?;
    let union_batch = AnchorBatch::draw(&union, 100, 54)?;
    let probe = held_out.features().row(0);
    println!(
        "score1 at a held-out point: train-only batch {:.3}, extended batch {:.3}",
        score1(&model, probe, &train_batch)?.value,
        score1(&model, probe, &union_batch)?.value
    );
    Ok(())
}
