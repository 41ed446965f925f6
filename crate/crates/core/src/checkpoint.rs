//! Versioned model checkpoints.
//!
//! Checkpoints are JSON documents storing every weight and bias as a
//! full-precision decimal string, so `load(save(m))` reproduces predictions
//! bit for bit. A kind tag distinguishes regressors from autoencoders.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::autoencoder::AutoencoderModel;
use crate::error::{Error, Result};
use crate::nn::{AnchoredModel, MlpSpec};
use crate::tensor::Tensor2;

pub const FORMAT_VERSION: u32 = 1;

/// Provenance stamped into every pipeline artifact.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMeta {
    pub config_hash: String,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Regressor,
    Autoencoder,
}

#[derive(Serialize, Deserialize)]
struct TensorDoc {
    rows: usize,
    cols: usize,
    data: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointDoc {
    format_version: u32,
    kind: ModelKind,
    config_hash: String,
    seed: u64,
    spec: MlpSpec,
    weights: Vec<TensorDoc>,
    biases: Vec<Vec<String>>,
}

fn encode_f64(v: f64) -> String {
    // Shortest decimal that parses back to the identical bit pattern.
    format!("{v}")
}

fn decode_f64(s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::Checkpoint(format!("bad float literal `{s}`")))
}

fn to_doc(model: &AnchoredModel, kind: ModelKind, meta: &RunMeta) -> CheckpointDoc {
    CheckpointDoc {
        format_version: FORMAT_VERSION,
        kind,
        config_hash: meta.config_hash.clone(),
        seed: meta.seed,
        spec: model.spec().clone(),
        weights: model
            .weights()
            .iter()
            .map(|w| TensorDoc {
                rows: w.rows(),
                cols: w.cols(),
                data: w.data().iter().map(|&v| encode_f64(v)).collect(),
            })
            .collect(),
        biases: model
            .biases()
            .iter()
            .map(|b| b.iter().map(|&v| encode_f64(v)).collect())
            .collect(),
    }
}

fn from_doc(doc: CheckpointDoc, expect: ModelKind) -> Result<(AnchoredModel, RunMeta)> {
    if doc.format_version != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported format_version {} (expected {FORMAT_VERSION})",
            doc.format_version
        )));
    }
    if doc.kind != expect {
        return Err(Error::Checkpoint(format!(
            "checkpoint kind {:?} does not match expected {:?}",
            doc.kind, expect
        )));
    }
    let mut weights = Vec::with_capacity(doc.weights.len());
    for t in doc.weights {
        let data = t
            .data
            .iter()
            .map(|s| decode_f64(s))
            .collect::<Result<Vec<f64>>>()?;
        weights.push(Tensor2::new(t.rows, t.cols, data)?);
    }
    let mut biases = Vec::with_capacity(doc.biases.len());
    for b in doc.biases {
        biases.push(b.iter().map(|s| decode_f64(s)).collect::<Result<Vec<f64>>>()?);
    }
    let model = AnchoredModel::from_parts(doc.spec, weights, biases)?;
    Ok((
        model,
        RunMeta {
            config_hash: doc.config_hash,
            seed: doc.seed,
        },
    ))
}

pub fn save_regressor(path: &Path, model: &AnchoredModel, meta: &RunMeta) -> Result<()> {
    write_doc(path, &to_doc(model, ModelKind::Regressor, meta))
}

pub fn load_regressor(path: &Path) -> Result<(AnchoredModel, RunMeta)> {
    from_doc(read_doc(path)?, ModelKind::Regressor)
}

pub fn save_autoencoder(path: &Path, model: &AutoencoderModel, meta: &RunMeta) -> Result<()> {
    write_doc(path, &to_doc(model.net(), ModelKind::Autoencoder, meta))
}

pub fn load_autoencoder(path: &Path) -> Result<(AutoencoderModel, RunMeta)> {
    let (net, meta) = from_doc(read_doc(path)?, ModelKind::Autoencoder)?;
    Ok((AutoencoderModel::from_net(net)?, meta))
}

fn write_doc(path: &Path, doc: &CheckpointDoc) -> Result<()> {
    let mut text = serde_json::to_string_pretty(doc)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn read_doc(path: &Path) -> Result<CheckpointDoc> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
