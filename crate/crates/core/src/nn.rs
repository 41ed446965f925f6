//! Dense feedforward networks with anchored input reparameterization.
//!
//! An anchored model consumes tuples `[r, x - r]` built from a query `x` and
//! an anchor `r` drawn from the training data, so its input layer is twice as
//! wide as the feature space. Hidden layers use ReLU; the output layer is
//! linear. Everything is `f64` and deterministic given the spec seed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
}

/// Architecture and init seed for a dense network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub output_dim: usize,
    pub activation: Activation,
    pub seed: u64,
}

impl MlpSpec {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(Error::InvalidConfig(
                "input_dim and output_dim must be >= 1".into(),
            ));
        }
        if self.hidden_dims.contains(&0) {
            return Err(Error::InvalidConfig("hidden dims must be >= 1".into()));
        }
        Ok(())
    }

    /// `(in, out)` pairs for each layer, input to output.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_dims.len() + 1);
        let mut prev = self.input_dim;
        for &h in &self.hidden_dims {
            dims.push((prev, h));
            prev = h;
        }
        dims.push((prev, self.output_dim));
        dims
    }
}

/// Concatenates anchor and residual into the network input `[r, x - r]`.
pub fn make_anchored_tuple(x: &[f64], r: &[f64]) -> Result<Vec<f64>> {
    if x.len() != r.len() {
        return Err(Error::ShapeMismatch {
            context: "make_anchored_tuple",
            expected: format!("anchor of dim {}", x.len()),
            actual: format!("anchor of dim {}", r.len()),
        });
    }
    let mut tuple = Vec::with_capacity(2 * x.len());
    tuple.extend_from_slice(r);
    tuple.extend(x.iter().zip(r).map(|(xi, ri)| xi - ri));
    Ok(tuple)
}

/// A trained (or freshly initialized) dense network over anchored tuples.
///
/// Weights are row-major `(out_dim, in_dim)` tensors; biases are per-layer
/// vectors. The model is immutable after training: concurrent reads are safe.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchoredModel {
    spec: MlpSpec,
    weights: Vec<Tensor2>,
    biases: Vec<Vec<f64>>,
}

impl AnchoredModel {
    /// Seeded He-style uniform fan-in initialization, zero biases.
    pub fn init(spec: MlpSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for (in_dim, out_dim) in spec.layer_dims() {
            let limit = (6.0 / in_dim as f64).sqrt();
            let data: Vec<f64> = (0..in_dim * out_dim)
                .map(|_| (rng.gen::<f64>() * 2.0 - 1.0) * limit)
                .collect();
            weights.push(Tensor2::new(out_dim, in_dim, data)?);
            biases.push(vec![0.0; out_dim]);
        }
        Ok(Self {
            spec,
            weights,
            biases,
        })
    }

    /// Builds a model from explicit parameters, validating the shape chain.
    pub fn from_parts(spec: MlpSpec, weights: Vec<Tensor2>, biases: Vec<Vec<f64>>) -> Result<Self> {
        spec.validate()?;
        let dims = spec.layer_dims();
        if weights.len() != dims.len() || biases.len() != dims.len() {
            return Err(Error::ShapeMismatch {
                context: "AnchoredModel::from_parts",
                expected: format!("{} layers", dims.len()),
                actual: format!("{} weight / {} bias arrays", weights.len(), biases.len()),
            });
        }
        for (i, ((in_dim, out_dim), (w, b))) in
            dims.iter().zip(weights.iter().zip(&biases)).enumerate()
        {
            if w.rows() != *out_dim || w.cols() != *in_dim || b.len() != *out_dim {
                return Err(Error::ShapeMismatch {
                    context: "AnchoredModel::from_parts",
                    expected: format!("layer {i}: weights {out_dim}x{in_dim}, bias {out_dim}"),
                    actual: format!(
                        "weights {}x{}, bias {}",
                        w.rows(),
                        w.cols(),
                        b.len()
                    ),
                });
            }
            if b.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("AnchoredModel bias"));
            }
        }
        Ok(Self {
            spec,
            weights,
            biases,
        })
    }

    #[inline]
    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    #[inline]
    pub fn weights(&self) -> &[Tensor2] {
        &self.weights
    }

    #[inline]
    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    #[inline]
    pub fn input_dim(&self) -> usize {
        self.spec.input_dim
    }

    #[inline]
    pub fn output_dim(&self) -> usize {
        self.spec.output_dim
    }

    /// Mutable parameter access for the optimizer.
    pub(crate) fn params_mut(&mut self) -> (&mut [Tensor2], &mut [Vec<f64>]) {
        (&mut self.weights, &mut self.biases)
    }

    fn check_input(&self, tuple: &[f64]) -> Result<()> {
        if tuple.len() != self.spec.input_dim {
            return Err(Error::ShapeMismatch {
                context: "AnchoredModel forward",
                expected: format!("{} inputs", self.spec.input_dim),
                actual: format!("{} inputs", tuple.len()),
            });
        }
        if tuple.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("AnchoredModel forward input"));
        }
        Ok(())
    }

    /// Forward pass for one tuple. Deterministic given the weights.
    pub fn forward_one(&self, tuple: &[f64]) -> Result<Vec<f64>> {
        self.check_input(tuple)?;
        Ok(self.forward_unchecked(tuple))
    }

    /// Forward pass over a batch of tuples (rows).
    pub fn forward_batch(&self, batch: &Tensor2) -> Result<Tensor2> {
        if batch.cols() != self.spec.input_dim {
            return Err(Error::ShapeMismatch {
                context: "AnchoredModel forward_batch",
                expected: format!("{} columns", self.spec.input_dim),
                actual: format!("{} columns", batch.cols()),
            });
        }
        let rows: Vec<Vec<f64>> = batch.row_iter().map(|r| self.forward_unchecked(r)).collect();
        Tensor2::from_rows(&rows)
    }

    pub(crate) fn forward_unchecked(&self, tuple: &[f64]) -> Vec<f64> {
        let last = self.weights.len() - 1;
        let mut current = tuple.to_vec();
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut next = affine(w, b, &current);
            if l != last {
                for v in &mut next {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            current = next;
        }
        current
    }

    /// Forward pass retaining pre-activations for backpropagation.
    pub(crate) fn forward_trace(&self, tuple: &[f64]) -> Trace {
        let last = self.weights.len() - 1;
        let mut inputs = Vec::with_capacity(self.weights.len());
        let mut pre_acts = Vec::with_capacity(self.weights.len());
        let mut current = tuple.to_vec();
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            inputs.push(current.clone());
            let z = affine(w, b, &current);
            pre_acts.push(z.clone());
            current = z;
            if l != last {
                for v in &mut current {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
        }
        Trace {
            inputs,
            pre_acts,
            output: current,
        }
    }

    /// Gradient of `upstream . F(tuple)` with respect to the tuple entries.
    ///
    /// The model is treated as frozen; this is the vector-Jacobian product
    /// through all layers. Matches central finite differences to 1e-4
    /// relative error in `f64`.
    pub fn grad_input(&self, tuple: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
        self.check_input(tuple)?;
        if upstream.len() != self.spec.output_dim {
            return Err(Error::ShapeMismatch {
                context: "AnchoredModel grad_input",
                expected: format!("{} upstream entries", self.spec.output_dim),
                actual: format!("{} upstream entries", upstream.len()),
            });
        }
        let trace = self.forward_trace(tuple);
        Ok(self.backprop_input_only(&trace, upstream))
    }

    fn backprop_input_only(&self, trace: &Trace, upstream: &[f64]) -> Vec<f64> {
        let last = self.weights.len() - 1;
        let mut delta = upstream.to_vec();
        for l in (0..self.weights.len()).rev() {
            if l != last {
                // Gate by the ReLU derivative at this layer's pre-activation.
                for (d, &z) in delta.iter_mut().zip(&trace.pre_acts[l]) {
                    if z <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            delta = matvec_transposed(&self.weights[l], &delta);
        }
        delta
    }

    /// Parameter gradients of `upstream . F(tuple)`: per-layer weight and
    /// bias gradients along the same path the training loop uses.
    pub fn grad_params(
        &self,
        tuple: &[f64],
        upstream: &[f64],
    ) -> Result<(Vec<Tensor2>, Vec<Vec<f64>>)> {
        self.check_input(tuple)?;
        if upstream.len() != self.spec.output_dim {
            return Err(Error::ShapeMismatch {
                context: "AnchoredModel grad_params",
                expected: format!("{} upstream entries", self.spec.output_dim),
                actual: format!("{} upstream entries", upstream.len()),
            });
        }
        let trace = self.forward_trace(tuple);
        let mut grads = Gradients::zeros_like(self);
        self.backprop_accumulate(&trace, upstream, &mut grads);
        Ok((grads.d_weights, grads.d_biases))
    }

    /// Backpropagates `upstream` through the trace, accumulating parameter
    /// gradients into `grads` and returning the input gradient.
    pub(crate) fn backprop_accumulate(
        &self,
        trace: &Trace,
        upstream: &[f64],
        grads: &mut Gradients,
    ) -> Vec<f64> {
        let last = self.weights.len() - 1;
        let mut delta = upstream.to_vec();
        for l in (0..self.weights.len()).rev() {
            if l != last {
                for (d, &z) in delta.iter_mut().zip(&trace.pre_acts[l]) {
                    if z <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            let input = &trace.inputs[l];
            let dw = grads.d_weights[l].data_mut();
            let in_dim = input.len();
            for (o, &d) in delta.iter().enumerate() {
                grads.d_biases[l][o] += d;
                let row = &mut dw[o * in_dim..(o + 1) * in_dim];
                for (slot, &x) in row.iter_mut().zip(input) {
                    *slot += d * x;
                }
            }
            delta = matvec_transposed(&self.weights[l], &delta);
        }
        delta
    }
}

/// `W x + b` for a row-major `(out, in)` weight matrix.
fn affine(w: &Tensor2, b: &[f64], x: &[f64]) -> Vec<f64> {
    let in_dim = w.cols();
    let data = w.data();
    b.iter()
        .enumerate()
        .map(|(o, &bias)| {
            let row = &data[o * in_dim..(o + 1) * in_dim];
            let mut sum = bias;
            for (wi, xi) in row.iter().zip(x) {
                sum += wi * xi;
            }
            sum
        })
        .collect()
}

/// `W^T d` for a row-major `(out, in)` weight matrix.
fn matvec_transposed(w: &Tensor2, d: &[f64]) -> Vec<f64> {
    let in_dim = w.cols();
    let data = w.data();
    let mut out = vec![0.0; in_dim];
    for (o, &dv) in d.iter().enumerate() {
        let row = &data[o * in_dim..(o + 1) * in_dim];
        for (slot, wi) in out.iter_mut().zip(row) {
            *slot += wi * dv;
        }
    }
    out
}

/// Per-layer activations captured during a forward pass.
pub(crate) struct Trace {
    /// Input to each layer (post-activation of the previous one).
    pub inputs: Vec<Vec<f64>>,
    /// Pre-activation values of each layer.
    pub pre_acts: Vec<Vec<f64>>,
    pub output: Vec<f64>,
}

/// Parameter-gradient accumulator shaped like a model.
pub(crate) struct Gradients {
    pub d_weights: Vec<Tensor2>,
    pub d_biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(model: &AnchoredModel) -> Self {
        Self {
            d_weights: model
                .weights
                .iter()
                .map(|w| Tensor2::zeros(w.rows(), w.cols()))
                .collect(),
            d_biases: model.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn reset(&mut self) {
        for w in &mut self.d_weights {
            w.data_mut().fill(0.0);
        }
        for b in &mut self.d_biases {
            b.fill(0.0);
        }
    }
}
