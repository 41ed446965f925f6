//! The two reverse-anchoring non-conformity scores side by side.
//!
//! The output-discrepancy score needs only forward passes; the
//! input-movement score descends on a fictitious sample through the frozen
//! regressor and autoencoder. Both rise off the training manifold.
//!
//! ```bash
//! cargo run --release -p anchor-risk --example nonconformity_scores
//! ```

use anchor_risk::autoencoder::{default_autoencoder_spec, train_autoencoder};
use anchor_risk::benchmarks::{gen_function, make_eval_grid, split_targets, BenchmarkFn, SplitMode, SplitSpec};
use anchor_risk::nn::{Activation, MlpSpec};
use anchor_risk::nonconformity::{score1, score2, AnchorBatch, Score2Config};
use anchor_risk::train::{train_anchored, LossKind, TrainConfig};

fn main() -> anchor_risk::Result<()> {
    let pool = gen_function(BenchmarkFn::F2, 400, None, 1)?;
    let split = SplitSpec {
        mode: SplitMode::gaps_default(),
        seed: 1,
    };
    let (train, _) = split_targets(&pool, &split)?;

    let spec = MlpSpec {
        input_dim: 2,
        hidden_dims: vec![64, 64],
        output_dim: 1,
        activation: Activation::Relu,
        seed: 21,
    };
    let cfg = TrainConfig {
        epochs: 1000,
        batch_size: 32,
        learning_rate: 3e-3,
        seed: 22,
        ..TrainConfig::default()
    };
    let (model, _) = train_anchored(&train, spec, &cfg)?;

    // The autoencoder regularizes the fictitious sample of the second score.
    let ae_cfg = TrainConfig {
        epochs: 600,
        batch_size: 32,
        learning_rate: 1e-3,
        loss: LossKind::Mse,
        seed: 23,
        ..TrainConfig::default()
    };
    let (autoencoder, _) = train_autoencoder(&train, default_autoencoder_spec(1, 24), &ae_cfg)?;

    // One shared batch of labeled training rows probes every query.
    let batch = AnchorBatch::draw(&train, 100, 25)?;
    let s2_cfg = Score2Config {
        eta: 0.05,
        lambda: 0.1,
        iters: 40,
        seed: 0,
    };

    let grid = make_eval_grid(BenchmarkFn::F2, 200)?;
    println!("{:>8} {:>10} {:>10}", "x", "score1", "score2");
    for i in (0..grid.len()).step_by(20) {
        let (x, _) = grid.sample(i);
        let s1 = score1(&model, x, &batch)?;
        let s2 = score2(&model, &autoencoder, x, &batch, &s2_cfg)?;
        println!("{:>8.3} {:>10.4} {:>10.4}", x[0], s1.value, s2.value);
    }

    // Far outside the training domain both scores blow up.
    for x in [[4.0], [6.0]] {
        let s1 = score1(&model, &x, &batch)?;
        let s2 = score2(&model, &autoencoder, &x, &batch, &s2_cfg)?;
        println!("off-domain x = {:>4.1}: score1 {:.3}, score2 {:.3}", x[0], s1.value, s2.value);
    }
    Ok(())
}
