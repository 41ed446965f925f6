//! Anchored training: per-sample anchor resampling, mini-batches, Adam.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::nn::{make_anchored_tuple, AnchoredModel, Gradients, MlpSpec};
use crate::tensor::Tensor2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Mae,
    Mse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub loss: LossKind,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 2000,
            batch_size: 64,
            learning_rate: 5e-5,
            loss: LossKind::Mae,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("learning_rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return Err(Error::InvalidConfig("adam betas must lie in [0, 1)".into()));
        }
        if self.adam_eps <= 0.0 {
            return Err(Error::InvalidConfig("adam_eps must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per-epoch mean training loss, in epoch order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainLog {
    pub epoch_loss: Vec<f64>,
}

struct Adam {
    m_weights: Vec<Tensor2>,
    v_weights: Vec<Tensor2>,
    m_biases: Vec<Vec<f64>>,
    v_biases: Vec<Vec<f64>>,
    step: u64,
}

impl Adam {
    fn new(model: &AnchoredModel) -> Self {
        Self {
            m_weights: model
                .weights()
                .iter()
                .map(|w| Tensor2::zeros(w.rows(), w.cols()))
                .collect(),
            v_weights: model
                .weights()
                .iter()
                .map(|w| Tensor2::zeros(w.rows(), w.cols()))
                .collect(),
            m_biases: model.biases().iter().map(|b| vec![0.0; b.len()]).collect(),
            v_biases: model.biases().iter().map(|b| vec![0.0; b.len()]).collect(),
            step: 0,
        }
    }

    fn update(
        &mut self,
        weights: &mut [Tensor2],
        biases: &mut [Vec<f64>],
        grads: &Gradients,
        cfg: &TrainConfig,
    ) {
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - cfg.adam_beta1.powi(t);
        let bc2 = 1.0 - cfg.adam_beta2.powi(t);
        for l in 0..weights.len() {
            adam_step(
                weights[l].data_mut(),
                grads.d_weights[l].data(),
                self.m_weights[l].data_mut(),
                self.v_weights[l].data_mut(),
                cfg,
                bc1,
                bc2,
            );
            adam_step(
                &mut biases[l],
                &grads.d_biases[l],
                &mut self.m_biases[l],
                &mut self.v_biases[l],
                cfg,
                bc1,
                bc2,
            );
        }
    }
}

fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    cfg: &TrainConfig,
    bc1: f64,
    bc2: f64,
) {
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * g;
        v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_eps);
    }
}

/// Trains an anchored regressor on scalar targets.
///
/// Every epoch draws one fresh anchor per sample, uniformly over the whole
/// training set, independent of batch membership. Fixed seed and data give
/// bit-identical weights.
pub fn train_anchored(
    dataset: &Dataset,
    spec: MlpSpec,
    cfg: &TrainConfig,
) -> Result<(AnchoredModel, TrainLog)> {
    if dataset.is_empty() {
        return Err(Error::EmptyInput("train_anchored dataset"));
    }
    if spec.input_dim != 2 * dataset.dim() {
        return Err(Error::ShapeMismatch {
            context: "train_anchored",
            expected: format!("input_dim {} (2 x feature dim)", 2 * dataset.dim()),
            actual: format!("input_dim {}", spec.input_dim),
        });
    }
    if spec.output_dim != 1 {
        return Err(Error::InvalidConfig(
            "train_anchored expects a scalar-output spec".into(),
        ));
    }
    let targets: Vec<Vec<f64>> = dataset.targets().iter().map(|&y| vec![y]).collect();
    let target_matrix = Tensor2::from_rows(&targets)?;
    let mut model = AnchoredModel::init(spec)?;
    let log = anchored_fit(dataset.features(), &target_matrix, &mut model, cfg)?;
    Ok((model, log))
}

/// Shared anchored training loop over an arbitrary target matrix.
/// Used by the regressor (`n x 1` targets) and the autoencoder (`n x d`).
pub(crate) fn anchored_fit(
    features: &Tensor2,
    targets: &Tensor2,
    model: &mut AnchoredModel,
    cfg: &TrainConfig,
) -> Result<TrainLog> {
    cfg.validate()?;
    let n = features.rows();
    debug_assert_eq!(targets.rows(), n);
    debug_assert_eq!(model.input_dim(), 2 * features.cols());
    debug_assert_eq!(model.output_dim(), targets.cols());

    let out_dim = targets.cols();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(model);
    let mut grads = Gradients::zeros_like(model);
    let mut epoch_loss = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..n).collect();

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let anchor_of: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();

        let mut loss_sum = 0.0;
        for (batch_no, batch) in order.chunks(cfg.batch_size).enumerate() {
            grads.reset();
            let scale = 1.0 / (batch.len() * out_dim) as f64;
            let mut batch_loss = 0.0;
            for (pos, &i) in batch.iter().enumerate() {
                let anchor = features.row(anchor_of[batch_no * cfg.batch_size + pos]);
                let tuple = make_anchored_tuple(features.row(i), anchor)
                    .expect("features share one dimension");
                let trace = model.forward_trace(&tuple);
                let target = targets.row(i);
                let mut upstream = vec![0.0; out_dim];
                for (j, (&p, &y)) in trace.output.iter().zip(target).enumerate() {
                    let e = p - y;
                    match cfg.loss {
                        LossKind::Mae => {
                            batch_loss += e.abs();
                            upstream[j] = e.signum() * scale;
                        }
                        LossKind::Mse => {
                            batch_loss += e * e;
                            upstream[j] = 2.0 * e * scale;
                        }
                    }
                }
                model.backprop_accumulate(&trace, &upstream, &mut grads);
            }
            let batch_mean = batch_loss * scale;
            if !batch_mean.is_finite() {
                return Err(Error::NanLoss {
                    epoch,
                    batch: batch_no,
                });
            }
            let (weights, biases) = model.params_mut();
            adam.update(weights, biases, &grads, cfg);
            loss_sum += batch_loss;
        }
        epoch_loss.push(loss_sum / (n * out_dim) as f64);
    }
    Ok(TrainLog { epoch_loss })
}
