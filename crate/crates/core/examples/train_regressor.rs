//! Train an anchored regressor on a 1D benchmark with a target-percentile
//! gap and watch the loss trend.
//!
//! ```bash
//! cargo run --release -p anchor-risk --example train_regressor
//! ```

use anchor_risk::benchmarks::{gen_function, split_targets, BenchmarkFn, SplitMode, SplitSpec};
use anchor_risk::nn::{Activation, MlpSpec};
use anchor_risk::train::{train_anchored, TrainConfig};

fn main() -> anchor_risk::Result<()> {
    // Sample the sine benchmark and hide the (30, 60] target-percentile band
    // from training.
    let pool = gen_function(BenchmarkFn::F2, 400, None, 1)?;
    let split = SplitSpec {
        mode: SplitMode::gaps_default(),
        seed: 1,
    };
    let (train, held_out) = split_targets(&pool, &split)?;
    println!(
        "pool {} rows -> train {} rows, held-out band {} rows",
        pool.len(),
        train.len(),
        held_out.len()
    );

    let spec = MlpSpec {
        input_dim: 2 * train.dim(),
        hidden_dims: vec![64, 64],
        output_dim: 1,
        activation: Activation::Relu,
        seed: 11,
    };
    let cfg = TrainConfig {
        epochs: 1000,
        batch_size: 32,
        learning_rate: 3e-3,
        seed: 12,
        ..TrainConfig::default()
    };
    let (model, log) = train_anchored(&train, spec, &cfg)?;

    for epoch in [0, 99, 299, 599, 999] {
        println!("epoch {:>4}: train loss {:.4}", epoch + 1, log.epoch_loss[epoch]);
    }
    println!(
        "model: {} layers, final train MAE {:.4}",
        model.weights().len(),
        log.epoch_loss.last().unwrap()
    );
    Ok(())
}
