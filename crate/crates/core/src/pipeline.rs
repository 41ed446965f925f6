//! Experiment pipeline: gen -> train / train-ae -> score -> evaluate -> report.
//!
//! Every stage reads its upstream artifacts from the run directory, verifies
//! the embedded config hash against the currently effective config (stale
//! artifacts are an error, not a silent reuse), and writes its own artifact
//! stamped with the stage hash and global seed. Reruns with an identical
//! config produce byte-identical files; timing goes to stdout only.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::autoencoder::{train_autoencoder, AutoencoderModel};
use crate::benchmarks::{gen_function, make_eval_grid, split_targets, BenchmarkFn, SplitMode, SplitSpec};
use crate::checkpoint::{self, RunMeta};
use crate::config::{Ablation, DataSource, ExperimentConfig, Stage};
use crate::dataset::{load_csv, Dataset, Standardizer};
use crate::error::{Error, Result};
use crate::metrics::{self, MetricsReport, RiskRecord};
use crate::nn::{AnchoredModel, MlpSpec};
use crate::nonconformity::{score1, score2, AnchorBatch, Score2Config, ScoreKind};
use crate::regimes::{assign_regimes, single_score_regimes, Regime};
use crate::tensor::Tensor2;
use crate::train::train_anchored;
use crate::uncertainty::{forward_uncertainty, AnchorSet, UqConfig};

pub const FORMAT_VERSION: u32 = 1;

const TRAIN_FILE: &str = "train.json";
const TEST_FILE: &str = "test.json";
const MANIFEST_FILE: &str = "manifest.json";
const MODEL_FILE: &str = "model.json";
const AUTOENCODER_FILE: &str = "autoencoder.json";
const SCORES_FILE: &str = "scores.json";
pub const SUMMARY_FILE: &str = "summary.json";

/// Evaluate writes one report per ablation mode, so the modes can coexist
/// in a run directory.
fn report_file(ablation: Ablation) -> &'static str {
    match ablation {
        Ablation::None => "report.json",
        Ablation::UqOnly => "report-uq-only.json",
        Ablation::MncOnly => "report-mnc-only.json",
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct DatasetDoc {
    format_version: u32,
    config_hash: String,
    seed: u64,
    provenance: String,
    columns: Option<Vec<String>>,
    features: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestDoc {
    format_version: u32,
    config_hash: String,
    seed: u64,
    source: DataSource,
    split: SplitMode,
    standardized: bool,
    standardizer: Option<Standardizer>,
    train_rows: usize,
    test_rows: usize,
    skipped_csv_lines: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleScore {
    pub id: usize,
    pub mu: f64,
    pub sigma: f64,
    /// Absent when the score optimization aborted for this sample.
    pub mnc: Option<f64>,
    pub target: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ScoresDoc {
    format_version: u32,
    config_hash: String,
    seed: u64,
    score_kind: ScoreKind,
    anchors: usize,
    anchor_batch: usize,
    samples: Vec<SampleScore>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluatedRecord {
    pub id: usize,
    pub regime: Regime,
    pub true_risk: f64,
    pub uncertainty: f64,
    pub mnc: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ReportDoc {
    pub format_version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub ablation: String,
    pub score_kind: ScoreKind,
    #[serde(flatten)]
    pub metrics: MetricsReport,
    pub records: Vec<EvaluatedRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SummaryRun {
    pub dir: String,
    pub seed: u64,
    pub config_hash: String,
    pub fn_pct: f64,
    pub fp_pct: f64,
    #[serde(default)]
    pub c_low: Option<f64>,
    #[serde(default)]
    pub c_high: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SummaryDoc {
    pub format_version: u32,
    pub runs: Vec<SummaryRun>,
    pub mean_fn_pct: f64,
    pub mean_fp_pct: f64,
    #[serde(default)]
    pub mean_c_low: Option<f64>,
    #[serde(default)]
    pub mean_c_high: Option<f64>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, stage: Stage, hint: &str) -> Result<T> {
    if !path.exists() {
        return Err(Error::MissingArtifact {
            stage: stage.name(),
            path: path.to_path_buf(),
            hint: hint.to_string(),
        });
    }
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn check_hash(producer: &'static str, path: &Path, expected: &str, found: &str) -> Result<()> {
    if expected != found {
        return Err(Error::StaleArtifact {
            stage: producer,
            path: path.to_path_buf(),
            expected: expected.to_string(),
            found: found.to_string(),
        });
    }
    Ok(())
}

fn dataset_to_doc(ds: &Dataset, config_hash: &str, seed: u64) -> DatasetDoc {
    DatasetDoc {
        format_version: FORMAT_VERSION,
        config_hash: config_hash.to_string(),
        seed,
        provenance: ds.provenance().to_string(),
        columns: ds.column_names().map(|c| c.to_vec()),
        features: ds.features().row_iter().map(|r| r.to_vec()).collect(),
        targets: ds.targets().to_vec(),
    }
}

fn dataset_from_doc(doc: DatasetDoc) -> Result<Dataset> {
    let ds = Dataset::new(
        Tensor2::from_rows(&doc.features)?,
        doc.targets,
        doc.provenance,
    )?;
    Ok(match doc.columns {
        Some(names) => ds.with_column_names(names),
        None => ds,
    })
}

/// Stage `gen`: materializes the train/test datasets and a manifest.
pub fn run_gen(config: &ExperimentConfig) -> Result<()> {
    let started = Instant::now();
    let hash = config.stage_hash(Stage::Gen);
    let out = &config.output_dir;
    fs::create_dir_all(out)?;

    let split_spec = SplitSpec {
        mode: config.dataset.split,
        seed: config.component_seed("split"),
    };

    let (mut train, mut test, skipped) = match &config.dataset.source {
        DataSource::Function { name } => {
            let func = BenchmarkFn::parse(name)?;
            let pool = gen_function(
                func,
                config.dataset.train_samples,
                None,
                config.component_seed("data"),
            )?;
            let (train, _held_out) = split_targets(&pool, &split_spec)?;
            // Synthetic evaluation covers the full domain so out-of-support
            // regions are present in the test set.
            let test = make_eval_grid(func, config.dataset.grid_points)?;
            (train, test, Vec::new())
        }
        DataSource::Csv { path, target_column } => {
            let load = load_csv(path, target_column)?;
            let (train, test) = split_targets(&load.dataset, &split_spec)?;
            (train, test, load.skipped_lines)
        }
    };

    let standardizer = if config.dataset.standardize_effective() {
        let standardizer = Standardizer::fit(train.features())?;
        train = train.with_features(standardizer.transform(train.features())?)?;
        test = test.with_features(standardizer.transform(test.features())?)?;
        Some(standardizer)
    } else {
        None
    };

    write_json(&out.join(TRAIN_FILE), &dataset_to_doc(&train, &hash, config.seed))?;
    write_json(&out.join(TEST_FILE), &dataset_to_doc(&test, &hash, config.seed))?;
    write_json(
        &out.join(MANIFEST_FILE),
        &ManifestDoc {
            format_version: FORMAT_VERSION,
            config_hash: hash,
            seed: config.seed,
            source: config.dataset.source.clone(),
            split: config.dataset.split,
            standardized: standardizer.is_some(),
            standardizer,
            train_rows: train.len(),
            test_rows: test.len(),
            skipped_csv_lines: skipped,
        },
    )?;
    println!(
        "gen: {} train rows, {} test rows in {:.2}s",
        train.len(),
        test.len(),
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

fn load_split(config: &ExperimentConfig, stage: Stage) -> Result<(Dataset, Dataset)> {
    let gen_hash = config.stage_hash(Stage::Gen);
    let train_path = config.output_dir.join(TRAIN_FILE);
    let doc: DatasetDoc = read_json(&train_path, stage, "gen")?;
    check_hash("gen", &train_path, &gen_hash, &doc.config_hash)?;
    let train = dataset_from_doc(doc)?;

    let test_path = config.output_dir.join(TEST_FILE);
    let doc: DatasetDoc = read_json(&test_path, stage, "gen")?;
    check_hash("gen", &test_path, &gen_hash, &doc.config_hash)?;
    let test = dataset_from_doc(doc)?;
    Ok((train, test))
}

/// Stage `train`: fits the anchored regressor and writes its checkpoint.
pub fn run_train(config: &ExperimentConfig) -> Result<()> {
    let started = Instant::now();
    let (train, _) = load_split(config, Stage::Train)?;
    let spec = MlpSpec {
        input_dim: 2 * train.dim(),
        hidden_dims: config.model.hidden_dims.clone(),
        output_dim: 1,
        activation: config.model.activation,
        seed: config.component_seed("model-init"),
    };
    let train_cfg = config.train.to_train_config(config.component_seed("train"));
    let (model, log) = train_anchored(&train, spec, &train_cfg)?;
    let meta = RunMeta {
        config_hash: config.stage_hash(Stage::Train),
        seed: config.seed,
    };
    checkpoint::save_regressor(&config.output_dir.join(MODEL_FILE), &model, &meta)?;
    println!(
        "train: {} epochs, final loss {:.6} in {:.2}s",
        log.epoch_loss.len(),
        log.epoch_loss.last().copied().unwrap_or(f64::NAN),
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

/// Stage `train-ae`: fits the anchored autoencoder used by the
/// input-movement score.
pub fn run_train_ae(config: &ExperimentConfig) -> Result<()> {
    let started = Instant::now();
    let (train, _) = load_split(config, Stage::TrainAe)?;
    let d = train.dim();
    let spec = MlpSpec {
        input_dim: 2 * d,
        hidden_dims: config.autoencoder.hidden_dims.clone(),
        output_dim: d,
        activation: config.model.activation,
        seed: config.component_seed("ae-init"),
    };
    let train_cfg = config
        .autoencoder
        .train
        .to_train_config(config.component_seed("ae-train"));
    let (model, log) = train_autoencoder(&train, spec, &train_cfg)?;
    let meta = RunMeta {
        config_hash: config.stage_hash(Stage::TrainAe),
        seed: config.seed,
    };
    checkpoint::save_autoencoder(&config.output_dir.join(AUTOENCODER_FILE), &model, &meta)?;
    println!(
        "train-ae: {} epochs, final loss {:.6} in {:.2}s",
        log.epoch_loss.len(),
        log.epoch_loss.last().copied().unwrap_or(f64::NAN),
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

fn load_model(config: &ExperimentConfig, stage: Stage) -> Result<AnchoredModel> {
    let path = config.output_dir.join(MODEL_FILE);
    if !path.exists() {
        return Err(Error::MissingArtifact {
            stage: stage.name(),
            path,
            hint: "train".to_string(),
        });
    }
    let (model, meta) = checkpoint::load_regressor(&path)?;
    check_hash("train", &path, &config.stage_hash(Stage::Train), &meta.config_hash)?;
    Ok(model)
}

fn load_ae(config: &ExperimentConfig, stage: Stage) -> Result<AutoencoderModel> {
    let path = config.output_dir.join(AUTOENCODER_FILE);
    if !path.exists() {
        return Err(Error::MissingArtifact {
            stage: stage.name(),
            path,
            hint: "train-ae".to_string(),
        });
    }
    let (model, meta) = checkpoint::load_autoencoder(&path)?;
    check_hash("train-ae", &path, &config.stage_hash(Stage::TrainAe), &meta.config_hash)?;
    Ok(model)
}

/// Stage `score`: per-test-sample predictive uncertainty plus the configured
/// non-conformity score, with one anchor set and one anchor batch shared
/// across the run.
pub fn run_score(config: &ExperimentConfig) -> Result<()> {
    let started = Instant::now();
    let (train, test) = load_split(config, Stage::Score)?;
    let model = load_model(config, Stage::Score)?;
    let autoencoder = if config.score.kind == ScoreKind::Score2 {
        Some(load_ae(config, Stage::Score)?)
    } else {
        None
    };

    let uq_cfg = UqConfig {
        anchors: config.uncertainty.anchors,
        seed: config.component_seed("uq-anchors"),
    };
    let anchor_set = AnchorSet::draw(train.features(), &uq_cfg)?;
    let batch = AnchorBatch::draw(
        &train,
        config.score.anchor_batch.min(train.len()),
        config.component_seed("anchor-batch"),
    )?;
    let score2_cfg = Score2Config {
        eta: config.score.eta,
        lambda: config.score.lambda,
        iters: config.score.iters,
        seed: config.component_seed("score2"),
    };

    let mut samples = Vec::with_capacity(test.len());
    let mut missing = 0_usize;
    for i in 0..test.len() {
        let (x, y) = test.sample(i);
        let est = forward_uncertainty(&model, x, &anchor_set)?;
        let mnc = match config.score.kind {
            ScoreKind::Score1 => Some(score1(&model, x, &batch)?.value),
            ScoreKind::Score2 => {
                let ae = autoencoder.as_ref().expect("autoencoder loaded for score2");
                match score2(&model, ae, x, &batch, &score2_cfg) {
                    Ok(score) => Some(score.value),
                    Err(Error::ScoreDiverged { iter }) => {
                        eprintln!("score: sample {i} diverged at iteration {iter}; reported missing");
                        missing += 1;
                        None
                    }
                    Err(other) => return Err(other),
                }
            }
        };
        samples.push(SampleScore {
            id: i,
            mu: est.mu,
            sigma: est.sigma,
            mnc,
            target: y,
        });
    }

    write_json(
        &config.output_dir.join(SCORES_FILE),
        &ScoresDoc {
            format_version: FORMAT_VERSION,
            config_hash: config.stage_hash(Stage::Score),
            seed: config.seed,
            score_kind: config.score.kind,
            anchors: config.uncertainty.anchors,
            anchor_batch: batch.len(),
            samples,
        },
    )?;
    let label = match config.score.kind {
        ScoreKind::Score1 => "score1",
        ScoreKind::Score2 => "score2",
    };
    println!(
        "score: {label} on {} samples ({missing} missing) in {:.2}s",
        test.len(),
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

/// Stage `evaluate`: regimes plus the metric suite, optionally in an
/// ablation mode that ranks a single score channel.
pub fn run_evaluate(
    config: &ExperimentConfig,
    ablation: Ablation,
    csv_out: Option<&Path>,
) -> Result<ReportDoc> {
    let started = Instant::now();
    let path = config.output_dir.join(SCORES_FILE);
    let doc: ScoresDoc = read_json(&path, Stage::Evaluate, "score")?;
    check_hash("score", &path, &config.stage_hash(Stage::Score), &doc.config_hash)?;

    let mut dropped = 0_usize;
    let usable: Vec<&SampleScore> = doc
        .samples
        .iter()
        .filter(|s| {
            if s.mnc.is_none() {
                dropped += 1;
            }
            s.mnc.is_some()
        })
        .collect();
    if usable.is_empty() {
        return Err(Error::EmptyInput("evaluate: no sample has a non-conformity score"));
    }

    let sigmas: Vec<f64> = usable.iter().map(|s| s.sigma).collect();
    let mncs: Vec<f64> = usable.iter().map(|s| s.mnc.expect("filtered")).collect();
    let risks: Vec<f64> = usable.iter().map(|s| (s.target - s.mu).abs()).collect();

    let regimes: Vec<Regime> = match ablation {
        Ablation::None => assign_regimes(&sigmas, &mncs, &config.regimes)?
            .into_iter()
            .map(|a| a.regime)
            .collect(),
        Ablation::UqOnly => single_score_regimes(&sigmas)?,
        Ablation::MncOnly => single_score_regimes(&mncs)?,
    };

    let records: Vec<RiskRecord> = regimes
        .iter()
        .enumerate()
        .map(|(i, &regime)| RiskRecord::new(usable[i].id, regime, risks[i]))
        .collect::<Result<_>>()?;
    let mut metrics = metrics::evaluate(&records)?;
    if dropped > 0 {
        metrics
            .warnings
            .push(format!("{dropped} samples dropped: missing non-conformity score"));
    }

    let evaluated: Vec<EvaluatedRecord> = records
        .iter()
        .enumerate()
        .map(|(i, r)| EvaluatedRecord {
            id: r.sample,
            regime: r.regime,
            true_risk: r.true_risk,
            uncertainty: sigmas[i],
            mnc: mncs[i],
        })
        .collect();

    let report = ReportDoc {
        format_version: FORMAT_VERSION,
        config_hash: config.evaluate_hash(ablation),
        seed: config.seed,
        ablation: ablation.label().to_string(),
        score_kind: doc.score_kind,
        metrics,
        records: evaluated,
    };
    write_json(&config.output_dir.join(report_file(ablation)), &report)?;
    if let Some(csv_path) = csv_out {
        write_records_csv(csv_path, &report.records)?;
    }
    println!(
        "evaluate[{}]: FN {:.2}% FP {:.2}% over {} samples in {:.2}s",
        ablation.label(),
        report.metrics.fn_pct,
        report.metrics.fp_pct,
        report.records.len(),
        started.elapsed().as_secs_f64()
    );
    Ok(report)
}

fn write_records_csv(path: &Path, records: &[EvaluatedRecord]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut text = String::from("id,regime,true_risk,uncertainty,mnc\n");
    for r in records {
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            r.id,
            r.regime.label(),
            r.true_risk,
            r.uncertainty,
            r.mnc
        ));
    }
    fs::write(path, text)?;
    Ok(())
}

/// Stage `report`: consolidates evaluate outputs from several run
/// directories (seeds) into one summary with mean metrics.
pub fn run_report(run_dirs: &[PathBuf], out_path: &Path) -> Result<SummaryDoc> {
    let started = Instant::now();
    if run_dirs.is_empty() {
        return Err(Error::EmptyInput("report: no run directories given"));
    }
    let mut runs = Vec::with_capacity(run_dirs.len());
    for dir in run_dirs {
        let path = dir.join(report_file(Ablation::None));
        let doc: ReportDoc = read_json(&path, Stage::Evaluate, "evaluate")?;
        runs.push(SummaryRun {
            dir: dir.display().to_string(),
            seed: doc.seed,
            config_hash: doc.config_hash.clone(),
            fn_pct: doc.metrics.fn_pct,
            fp_pct: doc.metrics.fp_pct,
            c_low: doc.metrics.c_low,
            c_high: doc.metrics.c_high,
        });
    }
    let mean = |values: Vec<f64>| -> Option<f64> {
        let finite: Vec<f64> = values.into_iter().filter(|v| v.is_finite()).collect();
        if finite.is_empty() {
            None
        } else {
            Some(crate::stats::mean(&finite))
        }
    };
    let summary = SummaryDoc {
        format_version: FORMAT_VERSION,
        mean_fn_pct: crate::stats::mean(&runs.iter().map(|r| r.fn_pct).collect::<Vec<_>>()),
        mean_fp_pct: crate::stats::mean(&runs.iter().map(|r| r.fp_pct).collect::<Vec<_>>()),
        mean_c_low: mean(runs.iter().filter_map(|r| r.c_low).collect()),
        mean_c_high: mean(runs.iter().filter_map(|r| r.c_high).collect()),
        runs,
    };
    write_json(out_path, &summary)?;
    println!(
        "report: {} runs, mean FN {:.2}% FP {:.2}% in {:.2}s",
        summary.runs.len(),
        summary.mean_fn_pct,
        summary.mean_fp_pct,
        started.elapsed().as_secs_f64()
    );
    Ok(summary)
}

/// Reads a previously written evaluate report for the given ablation mode.
pub fn load_report(dir: &Path, ablation: Ablation) -> Result<ReportDoc> {
    read_json(&dir.join(report_file(ablation)), Stage::Evaluate, "evaluate")
}
