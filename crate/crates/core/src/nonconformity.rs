//! Manifold non-conformity scores via reverse anchoring.
//!
//! Both scores swap the usual roles: the test sample becomes the anchor and
//! training samples become queries, so the known training targets measure how
//! far the test sample sits from the joint training distribution. The output
//! discrepancy score needs only forward passes; the input-movement score runs
//! gradient descent on a fictitious sample through the frozen networks.

use rand::seq::index::sample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autoencoder::AutoencoderModel;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::nn::{make_anchored_tuple, AnchoredModel};

/// Training rows `(r_k, y_k)` serving as reverse-anchoring probes. One batch
/// is shared across an evaluation run so scores stay comparable.
#[derive(Debug, Clone)]
pub struct AnchorBatch {
    features: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

impl AnchorBatch {
    pub fn new(features: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::EmptyInput("anchor batch"));
        }
        if features.len() != targets.len() {
            return Err(Error::ShapeMismatch {
                context: "AnchorBatch::new",
                expected: format!("{} targets", features.len()),
                actual: format!("{} targets", targets.len()),
            });
        }
        Ok(Self { features, targets })
    }

    /// Draws `size` labeled rows from the dataset (without replacement when
    /// it is large enough). The dataset is the training set, optionally
    /// extended with a calibration set.
    pub fn draw(dataset: &Dataset, size: usize, seed: u64) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidConfig("anchor batch size must be >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = dataset.len();
        let indices: Vec<usize> = if n >= size {
            sample(&mut rng, n, size).into_vec()
        } else {
            (0..size).map(|_| rng.gen_range(0..n)).collect()
        };
        Ok(Self {
            features: indices.iter().map(|&i| dataset.features().row(i).to_vec()).collect(),
            targets: indices.iter().map(|&i| dataset.targets()[i]).collect(),
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.features.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.features.iter().map(|f| f.as_slice()).zip(self.targets.iter().copied())
    }

    /// Restricts the batch to its first `k` rows.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        Self::new(self.features[..k.min(self.len())].to_vec(), self.targets[..k.min(self.len())].to_vec())
    }
}

/// Which non-conformity estimator produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    Score1,
    Score2,
}

/// A nonnegative, finite non-conformity value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonConformityScore {
    pub value: f64,
    pub kind: ScoreKind,
}

/// Settings for the input-movement score's inner gradient descent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score2Config {
    /// Learning rate of the descent on the fictitious sample.
    pub eta: f64,
    /// Weight of the cyclical-consistency regularizer.
    pub lambda: f64,
    /// Number of descent iterations.
    pub iters: usize,
    pub seed: u64,
}

impl Default for Score2Config {
    fn default() -> Self {
        Self {
            eta: 0.01,
            lambda: 0.1,
            iters: 100,
            seed: 0,
        }
    }
}

impl Score2Config {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidConfig("score2 eta must be positive".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig("score2 lambda must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Output-space discrepancy: the largest `|y_k - F([x, r_k - x])|` over the
/// anchor batch, with the test sample `x` in the anchor slot.
pub fn score1(model: &AnchoredModel, x: &[f64], batch: &AnchorBatch) -> Result<NonConformityScore> {
    if model.output_dim() != 1 {
        return Err(Error::InvalidConfig("score1 expects a scalar-output model".into()));
    }
    let mut worst = 0.0_f64;
    for (r, y) in batch.rows() {
        let tuple = make_anchored_tuple(r, x)?;
        let pred = model.forward_one(&tuple)?[0];
        worst = worst.max((y - pred).abs());
    }
    Ok(NonConformityScore {
        value: worst,
        kind: ScoreKind::Score1,
    })
}

/// Input-space movement: gradient descent moves a fictitious sample `xbar`
/// (initialized at `x`) until the model, anchored at `xbar`, matches the
/// batch targets; the score is `||x - xbar||_2`.
///
/// Each iteration minimizes the batch-mean absolute discrepancy plus
/// `lambda` times the cyclical-consistency regularizer. A non-finite inner
/// loss aborts the sample with a diagnostic so it can be reported missing.
pub fn score2(
    model: &AnchoredModel,
    autoencoder: &AutoencoderModel,
    x: &[f64],
    batch: &AnchorBatch,
    cfg: &Score2Config,
) -> Result<NonConformityScore> {
    cfg.validate()?;
    if model.output_dim() != 1 {
        return Err(Error::InvalidConfig("score2 expects a scalar-output model".into()));
    }
    if autoencoder.dim() != x.len() {
        return Err(Error::ShapeMismatch {
            context: "score2 autoencoder",
            expected: format!("feature dim {}", x.len()),
            actual: format!("feature dim {}", autoencoder.dim()),
        });
    }
    let d = x.len();
    let k = batch.len() as f64;
    let mut xbar = x.to_vec();

    for iter in 0..cfg.iters {
        let mut loss = 0.0;
        let mut grad = vec![0.0; d];

        for (r, y) in batch.rows() {
            // Reverse-anchored prediction of the training target, with xbar
            // in the anchor slot: t = [xbar, r - xbar].
            let tuple = make_anchored_tuple(r, &xbar)?;
            let pred = model.forward_one(&tuple)?[0];
            let err = y - pred;
            loss += err.abs() / k;
            if err != 0.0 {
                // d|y - F(t)|/dxbar = sign(y - F) * (J_res - J_anchor) where
                // xbar enters the anchor slot with +I and the residual slot
                // with -I.
                let g = model.grad_input(&tuple, &[1.0])?;
                let s = err.signum() / k;
                for i in 0..d {
                    grad[i] += s * (g[d + i] - g[i]);
                }
            }
        }

        if cfg.lambda > 0.0 {
            let (reg, reg_grad) = autoencoder.cyc_consistency_grad(x, &xbar)?;
            loss += cfg.lambda * reg;
            for (gi, ri) in grad.iter_mut().zip(&reg_grad) {
                *gi += cfg.lambda * ri;
            }
        }

        if !loss.is_finite() {
            return Err(Error::ScoreDiverged { iter });
        }
        for (b, g) in xbar.iter_mut().zip(&grad) {
            *b -= cfg.eta * g;
        }
    }

    let movement = x
        .iter()
        .zip(&xbar)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    if !movement.is_finite() {
        return Err(Error::ScoreDiverged { iter: cfg.iters });
    }
    Ok(NonConformityScore {
        value: movement,
        kind: ScoreKind::Score2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autoencoder::{default_autoencoder_spec, AutoencoderModel};
    use crate::nn::{Activation, MlpSpec};
    use crate::tensor::Tensor2;

    /// F([a, d]) = a + d, i.e. the model recovers the query exactly in 1D.
    /// Under reverse anchoring F([x, r - x]) = r, so a batch labeled with
    /// y_r = r is matched perfectly.
    fn sum_model() -> AnchoredModel {
        let spec = MlpSpec {
            input_dim: 2,
            hidden_dims: vec![],
            output_dim: 1,
            activation: Activation::Relu,
            seed: 0,
        };
        AnchoredModel::from_parts(
            spec,
            vec![Tensor2::new(1, 2, vec![1.0, 1.0]).unwrap()],
            vec![vec![0.0]],
        )
        .unwrap()
    }

    /// F([a, d]) = a: prediction equals whatever sits in the anchor slot.
    fn anchor_slot_model() -> AnchoredModel {
        let spec = MlpSpec {
            input_dim: 2,
            hidden_dims: vec![],
            output_dim: 1,
            activation: Activation::Relu,
            seed: 0,
        };
        AnchoredModel::from_parts(
            spec,
            vec![Tensor2::new(1, 2, vec![1.0, 0.0]).unwrap()],
            vec![vec![0.0]],
        )
        .unwrap()
    }

    fn identity_autoencoder() -> AutoencoderModel {
        // A([r, d]) = r + d reconstructs the query exactly, zeroing R.
        AutoencoderModel::from_net(sum_model()).unwrap()
    }

    #[test]
    fn score1_zero_for_oracle_model() {
        let model = sum_model();
        let batch = AnchorBatch::new(
            vec![vec![0.5], vec![-1.0], vec![2.0]],
            vec![0.5, -1.0, 2.0],
        )
        .unwrap();
        for x in [[0.0], [1.5], [-3.0]] {
            let s = score1(&model, &x, &batch).unwrap();
            assert_eq!(s.value, 0.0);
        }
    }

    #[test]
    fn score1_takes_max_of_residuals() {
        // Model predicts the anchor-slot value x for every probe, so the
        // residuals are |y_k - x|; with x = 1 and ys {1.3, 0.3} those are
        // {0.3, 0.7}.
        let model = anchor_slot_model();
        let batch = AnchorBatch::new(vec![vec![9.0], vec![9.0]], vec![1.3, 0.3]).unwrap();
        let s = score1(&model, &[1.0], &batch).unwrap();
        assert!((s.value - 0.7).abs() < 1e-12);
    }

    #[test]
    fn score1_monotone_in_batch_size() {
        let spec = MlpSpec {
            input_dim: 2,
            hidden_dims: vec![8],
            output_dim: 1,
            activation: Activation::Relu,
            seed: 21,
        };
        let model = AnchoredModel::init(spec).unwrap();
        let features: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64 / 6.0]).collect();
        let targets: Vec<f64> = (0..12).map(|i| (i as f64).sin()).collect();
        let batch = AnchorBatch::new(features, targets).unwrap();
        let x = [0.4];
        let mut prev = 0.0;
        for k in 1..=batch.len() {
            let s = score1(&model, &x, &batch.truncated(k).unwrap()).unwrap();
            assert!(s.value >= prev);
            prev = s.value;
        }
    }

    #[test]
    fn score1_invariant_to_batch_permutation() {
        let model = anchor_slot_model();
        let batch = AnchorBatch::new(
            vec![vec![1.0], vec![2.0], vec![3.0]],
            vec![0.1, 0.9, 0.4],
        )
        .unwrap();
        let reversed = AnchorBatch::new(
            vec![vec![3.0], vec![2.0], vec![1.0]],
            vec![0.4, 0.9, 0.1],
        )
        .unwrap();
        let a = score1(&model, &[0.2], &batch).unwrap();
        let b = score1(&model, &[0.2], &reversed).unwrap();
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn score2_zero_iterations_means_zero_movement() {
        let model = sum_model();
        let ae = identity_autoencoder();
        let batch = AnchorBatch::new(vec![vec![1.0]], vec![5.0]).unwrap();
        let cfg = Score2Config {
            iters: 0,
            ..Score2Config::default()
        };
        let s = score2(&model, &ae, &[0.7], &batch, &cfg).unwrap();
        assert_eq!(s.value, 0.0);
    }

    #[test]
    fn score2_stationary_at_zero_gradient_fixed_point() {
        // The oracle model already matches every target at xbar = x and
        // lambda = 0, so the descent never moves.
        let model = sum_model();
        let ae = identity_autoencoder();
        let batch = AnchorBatch::new(
            vec![vec![0.5], vec![-1.0], vec![2.0]],
            vec![0.5, -1.0, 2.0],
        )
        .unwrap();
        let cfg = Score2Config {
            lambda: 0.0,
            iters: 50,
            ..Score2Config::default()
        };
        let s = score2(&model, &ae, &[1.2], &batch, &cfg).unwrap();
        assert_eq!(s.value, 0.0);
    }

    #[test]
    fn score2_is_deterministic() {
        let spec = MlpSpec {
            input_dim: 2,
            hidden_dims: vec![12, 8],
            output_dim: 1,
            activation: Activation::Relu,
            seed: 4,
        };
        let model = AnchoredModel::init(spec).unwrap();
        let ae = AutoencoderModel::from_net(
            AnchoredModel::init(default_autoencoder_spec(1, 6)).unwrap(),
        )
        .unwrap();
        let batch = AnchorBatch::new(
            (0..10).map(|i| vec![i as f64 / 5.0]).collect(),
            (0..10).map(|i| (i as f64 / 5.0).cos()).collect(),
        )
        .unwrap();
        let cfg = Score2Config::default();
        let a = score2(&model, &ae, &[0.33], &batch, &cfg).unwrap();
        let b = score2(&model, &ae, &[0.33], &batch, &cfg).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert!(a.value >= 0.0);
    }

    #[test]
    fn score2_divergence_reports_iteration() {
        // An absurd learning rate overflows the descent within an iteration
        // or two; the sample must be reported as diverged, not returned.
        let spec = MlpSpec {
            input_dim: 2,
            hidden_dims: vec![8],
            output_dim: 1,
            activation: Activation::Relu,
            seed: 3,
        };
        let model = AnchoredModel::init(spec).unwrap();
        let ae = identity_autoencoder();
        let batch = AnchorBatch::new(vec![vec![1.0], vec![2.0]], vec![5.0, -5.0]).unwrap();
        let cfg = Score2Config {
            eta: 1e300,
            lambda: 0.0,
            iters: 5,
            seed: 0,
        };
        match score2(&model, &ae, &[0.5], &batch, &cfg) {
            Err(crate::error::Error::ScoreDiverged { .. }) => {}
            other => panic!("expected ScoreDiverged, got {other:?}"),
        }
    }

    #[test]
    fn anchor_batch_draw_is_seeded_and_sized() {
        let ds = crate::benchmarks::gen_function(crate::benchmarks::BenchmarkFn::F2, 50, None, 1)
            .unwrap();
        let a = AnchorBatch::draw(&ds, 20, 3).unwrap();
        let b = AnchorBatch::draw(&ds, 20, 3).unwrap();
        assert_eq!(a.len(), 20);
        let ra: Vec<f64> = a.rows().map(|(f, _)| f[0]).collect();
        let rb: Vec<f64> = b.rows().map(|(f, _)| f[0]).collect();
        assert_eq!(ra, rb);
        // Oversized requests fall back to drawing with replacement.
        let big = AnchorBatch::draw(&ds, 80, 3).unwrap();
        assert_eq!(big.len(), 80);
    }
}
