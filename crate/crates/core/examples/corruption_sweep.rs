//! The input-movement score under test-time covariate shift: the average
//! movement needed to re-match training targets grows with corruption.
//!
//! ```bash
//! cargo run --release -p anchor-risk --example corruption_sweep
//! ```

use anchor_risk::autoencoder::{default_autoencoder_spec, train_autoencoder};
use anchor_risk::benchmarks::{gen_function, make_eval_grid, split_targets, BenchmarkFn, SplitMode, SplitSpec};
use anchor_risk::nn::{Activation, MlpSpec};
use anchor_risk::nonconformity::{score2, AnchorBatch, Score2Config};
use anchor_risk::stats;
use anchor_risk::train::{train_anchored, LossKind, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(1e-12);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn main() -> anchor_risk::Result<()> {
    let pool = gen_function(BenchmarkFn::F2, 400, None, 9)?;
    let split = SplitSpec {
        mode: SplitMode::gaps_default(),
        seed: 9,
    };
    let (train, _) = split_targets(&pool, &split)?;

    let spec = MlpSpec {
        input_dim: 2,
        hidden_dims: vec![64, 64],
        output_dim: 1,
        activation: Activation::Relu,
        seed: 9001,
    };
    let cfg = TrainConfig {
        epochs: 1000,
        batch_size: 32,
        learning_rate: 3e-3,
        seed: 9002,
        ..TrainConfig::default()
    };
    let (model, _) = train_anchored(&train, spec, &cfg)?;

    let ae_cfg = TrainConfig {
        epochs: 600,
        batch_size: 32,
        learning_rate: 1e-3,
        loss: LossKind::Mse,
        seed: 9005,
        ..TrainConfig::default()
    };
    let (autoencoder, _) = train_autoencoder(&train, default_autoencoder_spec(1, 9006), &ae_cfg)?;

    let batch = AnchorBatch::draw(&train, 100, 9004)?;
    let s2_cfg = Score2Config {
        eta: 0.05,
        lambda: 0.1,
        iters: 40,
        seed: 0,
    };
    let grid = make_eval_grid(BenchmarkFn::F2, 200)?;

    println!("{:>12} {:>14}", "noise sigma", "mean score2");
    for noise in [0.0, 0.1, 0.25, 0.5] {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let scores: Vec<f64> = grid
            .features()
            .row_iter()
            .map(|x| {
                let corrupted: Vec<f64> = x
                    .iter()
                    .map(|&v| v + noise * standard_normal(&mut rng))
                    .collect();
                score2(&model, &autoencoder, &corrupted, &batch, &s2_cfg).map(|s| s.value)
            })
            .collect::<anchor_risk::Result<_>>()?;
        println!("{:>12.2} {:>14.4}", noise, stats::mean(&scores));
    }
    Ok(())
}
