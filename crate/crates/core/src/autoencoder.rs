//! Anchored autoencoder and the cyclical-consistency regularizer.
//!
//! The autoencoder consumes the same `[r, x - r]` tuples as the regressor but
//! reconstructs the query `x` itself. Its only downstream use is the
//! regularizer that keeps the fictitious sample of the input-space
//! non-conformity score on the data manifold.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::nn::{make_anchored_tuple, AnchoredModel, MlpSpec};
use crate::train::{anchored_fit, TrainConfig, TrainLog};

/// Dense anchored encoder/decoder stack; input `2d`, output `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct AutoencoderModel {
    net: AnchoredModel,
}

impl AutoencoderModel {
    pub fn from_net(net: AnchoredModel) -> Result<Self> {
        if net.input_dim() != 2 * net.output_dim() {
            return Err(Error::ShapeMismatch {
                context: "AutoencoderModel::from_net",
                expected: format!("input_dim {} (2 x output_dim)", 2 * net.output_dim()),
                actual: format!("input_dim {}", net.input_dim()),
            });
        }
        Ok(Self { net })
    }

    #[inline]
    pub fn net(&self) -> &AnchoredModel {
        &self.net
    }

    /// Feature dimension `d` being reconstructed.
    #[inline]
    pub fn dim(&self) -> usize {
        self.net.output_dim()
    }

    /// Reconstructs the query `x` through the anchor `r`.
    pub fn reconstruct(&self, x: &[f64], r: &[f64]) -> Result<Vec<f64>> {
        let tuple = make_anchored_tuple(x, r)?;
        self.net.forward_one(&tuple)
    }

    /// Cyclical consistency `||xbar - A([x, xbar - x])|| + ||x - A([xbar, x - xbar])||`:
    /// `x` and the fictitious sample must reconstruct each other under
    /// anchoring. Always nonnegative.
    pub fn cyc_consistency(&self, x: &[f64], xbar: &[f64]) -> Result<f64> {
        let (value, _) = self.cyc_terms(x, xbar, false)?;
        Ok(value)
    }

    /// Value and gradient of the regularizer with respect to `xbar`.
    pub fn cyc_consistency_grad(&self, x: &[f64], xbar: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (value, grad) = self.cyc_terms(x, xbar, true)?;
        Ok((value, grad.expect("gradient requested")))
    }

    fn cyc_terms(&self, x: &[f64], xbar: &[f64], want_grad: bool) -> Result<(f64, Option<Vec<f64>>)> {
        if x.len() != xbar.len() {
            return Err(Error::ShapeMismatch {
                context: "cyc_consistency",
                expected: format!("dim {}", x.len()),
                actual: format!("dim {}", xbar.len()),
            });
        }
        let d = x.len();

        // Forward term: xbar reconstructed with x as the anchor.
        let t1 = make_anchored_tuple(xbar, x)?;
        let a1 = self.net.forward_one(&t1)?;
        let u1: Vec<f64> = xbar.iter().zip(&a1).map(|(b, a)| b - a).collect();
        let n1 = norm2(&u1);

        // Reverse term: x reconstructed with xbar as the anchor.
        let t2 = make_anchored_tuple(x, xbar)?;
        let a2 = self.net.forward_one(&t2)?;
        let u2: Vec<f64> = x.iter().zip(&a2).map(|(xi, a)| xi - a).collect();
        let n2 = norm2(&u2);

        let value = n1 + n2;
        if !want_grad {
            return Ok((value, None));
        }

        let mut grad = vec![0.0; d];
        // d n1 / d xbar = u1/n1 - [J_A(t1)^T (u1/n1)]_residual
        // (xbar enters directly and through t1's residual slot).
        if n1 > 1e-12 {
            let v1: Vec<f64> = u1.iter().map(|u| u / n1).collect();
            let g1 = self.net.grad_input(&t1, &v1)?;
            for i in 0..d {
                grad[i] += v1[i] - g1[d + i];
            }
        }
        // d n2 / d xbar = [J_A(t2)^T (u2/n2)]_residual - [...]_anchor
        // (xbar enters t2's anchor slot positively, residual slot negatively,
        // and u2 = x - A(t2) flips the overall sign).
        if n2 > 1e-12 {
            let v2: Vec<f64> = u2.iter().map(|u| u / n2).collect();
            let g2 = self.net.grad_input(&t2, &v2)?;
            for i in 0..d {
                grad[i] += g2[d + i] - g2[i];
            }
        }
        Ok((value, Some(grad)))
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Trains an anchored autoencoder on the input features of `dataset`;
/// targets are the queries themselves.
pub fn train_autoencoder(
    dataset: &Dataset,
    spec: MlpSpec,
    cfg: &TrainConfig,
) -> Result<(AutoencoderModel, TrainLog)> {
    if dataset.is_empty() {
        return Err(Error::EmptyInput("train_autoencoder dataset"));
    }
    let d = dataset.dim();
    if spec.input_dim != 2 * d || spec.output_dim != d {
        return Err(Error::ShapeMismatch {
            context: "train_autoencoder",
            expected: format!("input_dim {}, output_dim {d}", 2 * d),
            actual: format!("input_dim {}, output_dim {}", spec.input_dim, spec.output_dim),
        });
    }
    let mut net = AnchoredModel::init(spec)?;
    let log = anchored_fit(dataset.features(), dataset.features(), &mut net, cfg)?;
    Ok((AutoencoderModel { net }, log))
}

/// Default autoencoder architecture for `d`-dimensional features:
/// encoder `d -> 64 -> 16`, decoder `16 -> 64 -> d`, anchored input.
pub fn default_autoencoder_spec(d: usize, seed: u64) -> MlpSpec {
    MlpSpec {
        input_dim: 2 * d,
        hidden_dims: vec![64, 16, 64],
        output_dim: d,
        activation: crate::nn::Activation::Relu,
        seed,
    }
}
