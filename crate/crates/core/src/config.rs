//! Experiment configuration: one JSON file drives every pipeline stage.
//!
//! Every tunable lives here with a serde default, so partial files work.
//! All randomness flows from the single global `seed`: per-component seeds
//! are derived from it with stable labels, never from ambient entropy.
//! Stages are content-addressed by chained section hashes, so any change to
//! an upstream knob invalidates downstream artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::benchmarks::SplitMode;
use crate::error::{Error, Result};
use crate::nn::Activation;
use crate::nonconformity::ScoreKind;
use crate::regimes::RegimeOptions;
use crate::stats::{derive_seed, fnv1a64};
use crate::train::LossKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DataSource {
    Function { name: String },
    Csv { path: PathBuf, target_column: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSection {
    pub source: DataSource,
    /// Pool size drawn for synthetic functions before splitting.
    #[serde(default = "default_train_samples")]
    pub train_samples: usize,
    /// Evaluation grid size for synthetic functions.
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_split")]
    pub split: SplitMode,
    /// Per-feature z-scoring with train-split statistics. Defaults to on for
    /// CSV sources and off for synthetic ones.
    #[serde(default)]
    pub standardize: Option<bool>,
}

fn default_train_samples() -> usize {
    400
}

fn default_grid_points() -> usize {
    200
}

fn default_split() -> SplitMode {
    SplitMode::gaps_default()
}

impl DatasetSection {
    pub fn standardize_effective(&self) -> bool {
        self.standardize
            .unwrap_or(matches!(self.source, DataSource::Csv { .. }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSection {
    #[serde(default = "default_hidden_dims")]
    pub hidden_dims: Vec<usize>,
    #[serde(default = "default_activation")]
    pub activation: Activation,
}

fn default_hidden_dims() -> Vec<usize> {
    vec![128, 128, 128, 128]
}

fn default_activation() -> Activation {
    Activation::Relu
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            hidden_dims: default_hidden_dims(),
            activation: default_activation(),
        }
    }
}

/// Training knobs as they appear in the file; the runtime seed is derived
/// from the global seed, never stored here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub loss: LossKind,
    #[serde(default = "default_beta1")]
    pub adam_beta1: f64,
    #[serde(default = "default_beta2")]
    pub adam_beta2: f64,
    #[serde(default = "default_eps")]
    pub adam_eps: f64,
}

fn default_beta1() -> f64 {
    0.9
}

fn default_beta2() -> f64 {
    0.999
}

fn default_eps() -> f64 {
    1e-8
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            epochs: 2000,
            batch_size: 64,
            learning_rate: 5e-5,
            loss: LossKind::Mae,
            adam_beta1: default_beta1(),
            adam_beta2: default_beta2(),
            adam_eps: default_eps(),
        }
    }
}

impl TrainSection {
    pub fn to_train_config(&self, seed: u64) -> crate::train::TrainConfig {
        crate::train::TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            loss: self.loss,
            adam_beta1: self.adam_beta1,
            adam_beta2: self.adam_beta2,
            adam_eps: self.adam_eps,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderSection {
    #[serde(default = "default_ae_hidden")]
    pub hidden_dims: Vec<usize>,
    #[serde(default = "default_ae_train")]
    pub train: TrainSection,
}

fn default_ae_hidden() -> Vec<usize> {
    vec![64, 16, 64]
}

fn default_ae_train() -> TrainSection {
    TrainSection {
        epochs: 600,
        batch_size: 32,
        learning_rate: 1e-3,
        loss: LossKind::Mse,
        ..TrainSection::default()
    }
}

impl Default for AutoencoderSection {
    fn default() -> Self {
        Self {
            hidden_dims: default_ae_hidden(),
            train: default_ae_train(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintySection {
    #[serde(default = "default_anchors")]
    pub anchors: usize,
}

fn default_anchors() -> usize {
    10
}

impl Default for UncertaintySection {
    fn default() -> Self {
        Self {
            anchors: default_anchors(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSection {
    #[serde(default = "default_score_kind")]
    pub kind: ScoreKind,
    #[serde(default = "default_anchor_batch")]
    pub anchor_batch: usize,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_iters")]
    pub iters: usize,
}

fn default_score_kind() -> ScoreKind {
    ScoreKind::Score1
}

fn default_anchor_batch() -> usize {
    100
}

fn default_eta() -> f64 {
    0.01
}

fn default_lambda() -> f64 {
    0.1
}

fn default_iters() -> usize {
    100
}

impl Default for ScoreSection {
    fn default() -> Self {
        Self {
            kind: default_score_kind(),
            anchor_batch: default_anchor_batch(),
            eta: default_eta(),
            lambda: default_lambda(),
            iters: default_iters(),
        }
    }
}

/// Ablation modes of the evaluate stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ablation {
    #[default]
    None,
    UqOnly,
    MncOnly,
}

impl Ablation {
    pub fn label(&self) -> &'static str {
        match self {
            Ablation::None => "none",
            Ablation::UqOnly => "uq-only",
            Ablation::MncOnly => "mnc-only",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub dataset: DatasetSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub autoencoder: AutoencoderSection,
    #[serde(default)]
    pub uncertainty: UncertaintySection,
    #[serde(default)]
    pub score: ScoreSection,
    #[serde(default)]
    pub regimes: RegimeOptions,
}

/// Pipeline stages in dependency order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Gen,
    Train,
    TrainAe,
    Score,
    Evaluate,
}

impl Stage {
    pub fn name(&self) -> &'static str {
        match self {
            Stage::Gen => "gen",
            Stage::Train => "train",
            Stage::TrainAe => "train-ae",
            Stage::Score => "score",
            Stage::Evaluate => "evaluate",
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let config: ExperimentConfig = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dataset.train_samples == 0 {
            return Err(Error::InvalidConfig("dataset.train_samples must be >= 1".into()));
        }
        if self.dataset.grid_points < 2 {
            return Err(Error::InvalidConfig("dataset.grid_points must be >= 2".into()));
        }
        if self.uncertainty.anchors < 2 {
            return Err(Error::InvalidConfig("uncertainty.anchors must be >= 2".into()));
        }
        if self.score.anchor_batch == 0 {
            return Err(Error::InvalidConfig("score.anchor_batch must be >= 1".into()));
        }
        self.train.to_train_config(0).validate()?;
        self.autoencoder.train.to_train_config(0).validate()?;
        if self.score.eta <= 0.0 || self.score.lambda < 0.0 {
            return Err(Error::InvalidConfig(
                "score.eta must be > 0 and score.lambda >= 0".into(),
            ));
        }
        Ok(())
    }

    /// Derived seed for one named stochastic component.
    pub fn component_seed(&self, label: &str) -> u64 {
        derive_seed(self.seed, label)
    }

    /// Content hash of one stage: the hash of everything the stage's output
    /// depends on, chained through its upstream stages.
    pub fn stage_hash(&self, stage: Stage) -> String {
        format!("{:016x}", self.stage_hash_raw(stage, Ablation::None))
    }

    /// Evaluate-stage hash also covers the ablation mode.
    pub fn evaluate_hash(&self, ablation: Ablation) -> String {
        format!("{:016x}", self.stage_hash_raw(Stage::Evaluate, ablation))
    }

    fn stage_hash_raw(&self, stage: Stage, ablation: Ablation) -> u64 {
        let section = |v: &str| fnv1a64(v.as_bytes());
        match stage {
            Stage::Gen => {
                let payload = format!(
                    "gen:{}:{}",
                    self.seed,
                    serde_json::to_string(&self.dataset).expect("serializable section"),
                );
                section(&payload)
            }
            Stage::Train => {
                let payload = format!(
                    "train:{:016x}:{}:{}",
                    self.stage_hash_raw(Stage::Gen, Ablation::None),
                    serde_json::to_string(&self.model).expect("serializable section"),
                    serde_json::to_string(&self.train).expect("serializable section"),
                );
                section(&payload)
            }
            Stage::TrainAe => {
                let payload = format!(
                    "train-ae:{:016x}:{}",
                    self.stage_hash_raw(Stage::Gen, Ablation::None),
                    serde_json::to_string(&self.autoencoder).expect("serializable section"),
                );
                section(&payload)
            }
            Stage::Score => {
                let ae_part = if self.score.kind == ScoreKind::Score2 {
                    format!("{:016x}", self.stage_hash_raw(Stage::TrainAe, Ablation::None))
                } else {
                    "-".to_string()
                };
                let payload = format!(
                    "score:{:016x}:{ae_part}:{}:{}",
                    self.stage_hash_raw(Stage::Train, Ablation::None),
                    serde_json::to_string(&self.uncertainty).expect("serializable section"),
                    serde_json::to_string(&self.score).expect("serializable section"),
                );
                section(&payload)
            }
            Stage::Evaluate => {
                let payload = format!(
                    "evaluate:{:016x}:{}:{}",
                    self.stage_hash_raw(Stage::Score, Ablation::None),
                    serde_json::to_string(&self.regimes).expect("serializable section"),
                    ablation.label(),
                );
                section(&payload)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_json() -> &'static str {
        r#"{
            "seed": 7,
            "output_dir": "/tmp/run",
            "dataset": { "source": { "kind": "function", "name": "f2" } }
        }"#
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let config: ExperimentConfig = serde_json::from_str(minimal_json()).unwrap();
        assert_eq!(config.model.hidden_dims, vec![128, 128, 128, 128]);
        assert_eq!(config.train.epochs, 2000);
        assert_eq!(config.uncertainty.anchors, 10);
        assert_eq!(config.score.anchor_batch, 100);
        assert!(!config.regimes.conditional_mnc);
        assert!(!config.dataset.standardize_effective());
        config.validate().unwrap();
    }

    #[test]
    fn csv_source_standardizes_by_default() {
        let config: ExperimentConfig = serde_json::from_str(
            r#"{
                "seed": 1,
                "output_dir": "/tmp/x",
                "dataset": {
                    "source": { "kind": "csv", "path": "data.csv", "target_column": "y" }
                }
            }"#,
        )
        .unwrap();
        assert!(config.dataset.standardize_effective());
    }

    #[test]
    fn stage_hashes_chain_upstream_changes() {
        let a: ExperimentConfig = serde_json::from_str(minimal_json()).unwrap();
        let mut b = a.clone();
        b.seed = 8;
        // A seed change must invalidate every stage.
        for stage in [Stage::Gen, Stage::Train, Stage::TrainAe, Stage::Score, Stage::Evaluate] {
            assert_ne!(a.stage_hash(stage), b.stage_hash(stage), "{stage:?}");
        }

        let mut c = a.clone();
        c.train.epochs = 3000;
        assert_eq!(a.stage_hash(Stage::Gen), c.stage_hash(Stage::Gen));
        assert_ne!(a.stage_hash(Stage::Train), c.stage_hash(Stage::Train));
        assert_ne!(a.stage_hash(Stage::Score), c.stage_hash(Stage::Score));

        // Score knobs do not touch training.
        let mut d = a.clone();
        d.score.eta = 0.5;
        assert_eq!(a.stage_hash(Stage::Train), d.stage_hash(Stage::Train));
        assert_ne!(a.stage_hash(Stage::Score), d.stage_hash(Stage::Score));
    }

    #[test]
    fn autoencoder_only_affects_score2_hash() {
        let a: ExperimentConfig = serde_json::from_str(minimal_json()).unwrap();
        let mut b = a.clone();
        b.autoencoder.train.epochs = 999;
        // score1 ignores the autoencoder.
        assert_eq!(a.stage_hash(Stage::Score), b.stage_hash(Stage::Score));

        let mut a2 = a.clone();
        a2.score.kind = crate::nonconformity::ScoreKind::Score2;
        let mut b2 = a2.clone();
        b2.autoencoder.train.epochs = 999;
        assert_ne!(a2.stage_hash(Stage::Score), b2.stage_hash(Stage::Score));
    }

    #[test]
    fn evaluate_hash_distinguishes_ablations() {
        let a: ExperimentConfig = serde_json::from_str(minimal_json()).unwrap();
        assert_ne!(a.evaluate_hash(Ablation::None), a.evaluate_hash(Ablation::UqOnly));
        assert_ne!(a.evaluate_hash(Ablation::UqOnly), a.evaluate_hash(Ablation::MncOnly));
    }

    #[test]
    fn component_seeds_are_label_scoped() {
        let config: ExperimentConfig = serde_json::from_str(minimal_json()).unwrap();
        assert_ne!(config.component_seed("train"), config.component_seed("data"));
    }

    #[test]
    fn validate_rejects_bad_sections() {
        let mut config: ExperimentConfig = serde_json::from_str(minimal_json()).unwrap();
        config.uncertainty.anchors = 1;
        assert!(config.validate().is_err());
    }
}
