//! Forward-anchoring predictive mean and uncertainty, plus optional
//! split-conformal scaling of the predictive standard deviation.

use rand::seq::index::sample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{make_anchored_tuple, AnchoredModel};
use crate::stats;
use crate::tensor::Tensor2;

/// How many anchors to marginalize over and which stream to draw them from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UqConfig {
    /// Number of anchors `K`; the standard deviation uses a `K - 1` divisor,
    /// so at least two are required.
    pub anchors: usize,
    pub seed: u64,
}

impl Default for UqConfig {
    fn default() -> Self {
        Self {
            anchors: 10,
            seed: 0,
        }
    }
}

/// Predictive mean and standard deviation for one query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyEstimate {
    pub mu: f64,
    pub sigma: f64,
}

/// A fixed set of anchor feature vectors, shared across an evaluation run so
/// per-sample estimates stay comparable.
#[derive(Debug, Clone)]
pub struct AnchorSet {
    anchors: Vec<Vec<f64>>,
}

impl AnchorSet {
    /// Draws `cfg.anchors` rows from the pool, without replacement when the
    /// pool is large enough, with replacement otherwise.
    ///
    /// The pool is the training feature matrix, optionally extended with a
    /// calibration set.
    pub fn draw(pool: &Tensor2, cfg: &UqConfig) -> Result<Self> {
        if cfg.anchors < 2 {
            return Err(Error::InvalidConfig(
                "UqConfig.anchors must be >= 2 (sigma uses a K - 1 divisor)".into(),
            ));
        }
        if pool.rows() == 0 {
            return Err(Error::EmptyInput("anchor pool"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let indices: Vec<usize> = if pool.rows() >= cfg.anchors {
            sample(&mut rng, pool.rows(), cfg.anchors).into_vec()
        } else {
            (0..cfg.anchors).map(|_| rng.gen_range(0..pool.rows())).collect()
        };
        Ok(Self {
            anchors: indices.iter().map(|&i| pool.row(i).to_vec()).collect(),
        })
    }

    pub fn from_rows(anchors: Vec<Vec<f64>>) -> Result<Self> {
        if anchors.len() < 2 {
            return Err(Error::InvalidConfig("anchor set needs at least 2 rows".into()));
        }
        Ok(Self { anchors })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.anchors
    }
}

/// Predictive mean and uncertainty by marginalizing the anchor choice:
/// `mu` is the mean of `F([r_k, x - r_k])` over the anchor set and `sigma`
/// the sample standard deviation of those predictions.
pub fn forward_uncertainty(
    model: &AnchoredModel,
    x: &[f64],
    anchors: &AnchorSet,
) -> Result<UncertaintyEstimate> {
    if model.output_dim() != 1 {
        return Err(Error::InvalidConfig(
            "forward_uncertainty expects a scalar-output model".into(),
        ));
    }
    let k = anchors.len();
    let mut predictions = Vec::with_capacity(k);
    for r in anchors.rows() {
        let tuple = make_anchored_tuple(x, r)?;
        predictions.push(model.forward_one(&tuple)?[0]);
    }
    let mu = stats::mean(&predictions);
    let sigma = stats::sample_std(&predictions);
    Ok(UncertaintyEstimate { mu, sigma })
}

/// Convenience: estimates for every row of a feature matrix with one shared
/// anchor set. Pure per sample; order follows the input rows.
pub fn forward_uncertainty_batch(
    model: &AnchoredModel,
    features: &Tensor2,
    anchors: &AnchorSet,
) -> Result<Vec<UncertaintyEstimate>> {
    features
        .row_iter()
        .map(|x| forward_uncertainty(model, x, anchors))
        .collect()
}

/// Split-conformal multiplier: the smallest `c` such that
/// `|y - mu| <= c * sigma` holds for at least `ceil(coverage * (n + 1))` of
/// the `n` calibration points. Downstream sigmas are multiplied by `c`.
///
/// A zero-sigma point counts as coverable only when its residual is zero.
pub fn calibrate_sigma(
    estimates: &[UncertaintyEstimate],
    targets: &[f64],
    coverage: f64,
) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::EmptyInput("calibration set"));
    }
    if estimates.len() != targets.len() {
        return Err(Error::ShapeMismatch {
            context: "calibrate_sigma",
            expected: format!("{} targets", estimates.len()),
            actual: format!("{} targets", targets.len()),
        });
    }
    if !(0.0 < coverage && coverage < 1.0) {
        return Err(Error::InvalidConfig("coverage must lie in (0, 1)".into()));
    }
    let n = estimates.len();
    let mut ratios: Vec<f64> = estimates
        .iter()
        .zip(targets)
        .map(|(e, &y)| {
            let residual = (y - e.mu).abs();
            if e.sigma > 0.0 {
                residual / e.sigma
            } else if residual == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .collect();
    ratios.sort_by(f64::total_cmp);
    // ceil(coverage * (n + 1)) points must be covered, clamped to n when the
    // calibration set is too small for the finite-sample correction.
    let rank = ((coverage * (n + 1) as f64).ceil() as usize).min(n);
    Ok(ratios[rank - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, MlpSpec};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Model predicting a constant regardless of input.
    fn constant_model(value: f64) -> AnchoredModel {
        let spec = MlpSpec {
            input_dim: 2,
            hidden_dims: vec![],
            output_dim: 1,
            activation: Activation::Relu,
            seed: 0,
        };
        AnchoredModel::from_parts(
            spec,
            vec![Tensor2::new(1, 2, vec![0.0, 0.0]).unwrap()],
            vec![vec![value]],
        )
        .unwrap()
    }

    /// Model returning the anchor coordinate itself: F([r, d]) = r.
    fn anchor_identity_model() -> AnchoredModel {
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

    #[test]
    fn constant_model_has_zero_sigma() {
        let model = constant_model(5.0);
        let anchors = AnchorSet::from_rows(vec![vec![0.1], vec![0.7], vec![-0.3]]).unwrap();
        let est = forward_uncertainty(&model, &[0.42], &anchors).unwrap();
        assert_eq!(est.mu, 5.0);
        assert_eq!(est.sigma, 0.0);
    }

    #[test]
    fn two_anchor_closed_form() {
        let model = anchor_identity_model();
        let anchors = AnchorSet::from_rows(vec![vec![1.0], vec![3.0]]).unwrap();
        let est = forward_uncertainty(&model, &[0.0], &anchors).unwrap();
        assert!((est.mu - 2.0).abs() < 1e-12);
        assert!((est.sigma - 2.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn sigma_invariant_to_anchor_permutation() {
        let spec = MlpSpec {
            input_dim: 4,
            hidden_dims: vec![8],
            output_dim: 1,
            activation: Activation::Relu,
            seed: 12,
        };
        let model = AnchoredModel::init(spec).unwrap();
        let a = vec![vec![0.1, 0.2], vec![0.9, -0.4], vec![-0.5, 0.3], vec![0.0, 0.0]];
        let mut b = a.clone();
        b.reverse();
        let x = [0.25, -0.75];
        let ea = forward_uncertainty(&model, &x, &AnchorSet::from_rows(a).unwrap()).unwrap();
        let eb = forward_uncertainty(&model, &x, &AnchorSet::from_rows(b).unwrap()).unwrap();
        assert!((ea.mu - eb.mu).abs() < 1e-12);
        assert!((ea.sigma - eb.sigma).abs() < 1e-12);
    }

    #[test]
    fn draw_without_replacement_when_pool_suffices() {
        let pool = Tensor2::from_rows(&(0..20).map(|i| vec![i as f64]).collect::<Vec<_>>()).unwrap();
        let cfg = UqConfig { anchors: 20, seed: 3 };
        let set = AnchorSet::draw(&pool, &cfg).unwrap();
        let mut seen: Vec<i64> = set.rows().iter().map(|r| r[0] as i64).collect();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 20);
    }

    #[test]
    fn draw_rejects_k_below_two() {
        let pool = Tensor2::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let cfg = UqConfig { anchors: 1, seed: 0 };
        assert!(AnchorSet::draw(&pool, &cfg).is_err());
    }

    #[test]
    fn mu_standard_error_shrinks_with_k() {
        // For a fixed pool, mu's across-seed spread shrinks as K grows.
        let spec = MlpSpec {
            input_dim: 2,
            hidden_dims: vec![16],
            output_dim: 1,
            activation: Activation::Relu,
            seed: 5,
        };
        let model = AnchoredModel::init(spec).unwrap();
        let pool =
            Tensor2::from_rows(&(0..60).map(|i| vec![i as f64 / 30.0 - 1.0]).collect::<Vec<_>>())
                .unwrap();
        let x = [0.3];
        let spread = |k: usize| {
            let mus: Vec<f64> = (0..10)
                .map(|s| {
                    let cfg = UqConfig { anchors: k, seed: s };
                    let set = AnchorSet::draw(&pool, &cfg).unwrap();
                    forward_uncertainty(&model, &x, &set).unwrap().mu
                })
                .collect();
            stats::sample_std(&mus)
        };
        let s2 = spread(2);
        let s10 = spread(10);
        let s50 = spread(50);
        assert!(s2 > s10, "spread(2)={s2} vs spread(10)={s10}");
        assert!(s10 > s50, "spread(10)={s10} vs spread(50)={s50}");
    }

    #[test]
    fn calibration_order_statistic_example() {
        // mu = 0, sigma_i = 1/i, y_i = 1 gives residual/sigma ratios
        // {1, 2, ..., 10}; coverage 0.9 needs the ceil(0.9 * 11) = 10th
        // order statistic.
        let estimates: Vec<UncertaintyEstimate> = (1..=10)
            .map(|i| UncertaintyEstimate {
                mu: 0.0,
                sigma: 1.0 / i as f64,
            })
            .collect();
        let targets = vec![1.0; 10];
        let c = calibrate_sigma(&estimates, &targets, 0.9).unwrap();
        assert!((c - 10.0).abs() < 1e-12);
    }

    #[test]
    fn calibration_all_zero_residuals() {
        let estimates = vec![UncertaintyEstimate { mu: 2.0, sigma: 0.5 }; 8];
        let targets = vec![2.0; 8];
        assert_eq!(calibrate_sigma(&estimates, &targets, 0.9).unwrap(), 0.0);
    }

    #[test]
    fn calibration_matches_brute_force_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let estimates: Vec<UncertaintyEstimate> = (0..200)
            .map(|_| UncertaintyEstimate {
                mu: rng.gen::<f64>() * 4.0 - 2.0,
                sigma: rng.gen::<f64>() + 0.05,
            })
            .collect();
        let targets: Vec<f64> = estimates
            .iter()
            .map(|e| e.mu + (rng.gen::<f64>() * 6.0 - 3.0) * e.sigma)
            .collect();
        let coverage = 0.9;
        let c = calibrate_sigma(&estimates, &targets, coverage).unwrap();

        // Brute force: scan candidate multipliers (every observed ratio) and
        // take the smallest achieving the required count.
        let n = estimates.len();
        let need = (coverage * (n + 1) as f64).ceil() as usize;
        let mut candidates: Vec<f64> = estimates
            .iter()
            .zip(&targets)
            .map(|(e, &y)| (y - e.mu).abs() / e.sigma)
            .collect();
        candidates.sort_by(f64::total_cmp);
        let brute = candidates
            .iter()
            .copied()
            .find(|&cand| {
                estimates
                    .iter()
                    .zip(&targets)
                    .filter(|(e, &y)| (y - e.mu).abs() <= cand * e.sigma)
                    .count()
                    >= need
            })
            .unwrap();
        assert!((c - brute).abs() < 1e-12, "impl {c} vs brute {brute}");
    }

    #[test]
    fn calibration_zero_sigma_points() {
        // Zero sigma with nonzero residual can never be covered; with
        // coverage 0.5 over 3 points the finite ratios still decide.
        let estimates = vec![
            UncertaintyEstimate { mu: 0.0, sigma: 0.0 },
            UncertaintyEstimate { mu: 0.0, sigma: 1.0 },
            UncertaintyEstimate { mu: 0.0, sigma: 1.0 },
        ];
        let targets = vec![0.0, 0.5, 1.0];
        // Ratios: {0, 0.5, 1.0}; need ceil(0.5 * 4) = 2 -> c = 0.5.
        let c = calibrate_sigma(&estimates, &targets, 0.5).unwrap();
        assert_eq!(c, 0.5);
    }
}
