//! Failure-risk characterization for deep regression models via anchored
//! training.
//!
//! An anchored network consumes `[r, x - r]` tuples built from a query `x`
//! and a training-set anchor `r`, learning predictions that are consistent
//! across anchor choices. That one change yields two complementary failure
//! signals from a single model:
//!
//! - **forward anchoring** — vary the anchor for a fixed query to get a
//!   predictive mean and uncertainty ([`uncertainty`]);
//! - **reverse anchoring** — make the query the anchor and ask the model to
//!   recover known training targets; the discrepancy (or the input movement
//!   needed to remove it) measures non-conformity to the training manifold
//!   ([`nonconformity`]).
//!
//! Binning both signals into quantile ranges partitions a test set into four
//! risk regimes ([`regimes`]), which the metric suite ([`metrics`]) scores
//! against observed errors: missed failures, false alarms, and the overlap
//! between neighboring regimes.
//!
//! # Examples
//!
//! Each major capability has a runnable example:
//!
//! ```text
//! examples/
//! ├── train_regressor.rs          # anchored training on a gapped benchmark
//! ├── predict_with_uncertainty.rs # forward anchoring: mu and sigma
//! ├── nonconformity_scores.rs     # reverse anchoring: both scores
//! ├── risk_regimes.rs             # the full four-regime loop + metrics
//! ├── calibrate_coverage.rs       # split-conformal sigma scaling
//! ├── csv_dataset.rs              # CSV ingestion and standardization
//! ├── corruption_sweep.rs         # input-movement score under covariate shift
//! └── full_pipeline.rs            # the file-based pipeline the CLI drives
//! ```
//!
//! ```bash
//! cargo run --release -p anchor-risk --example risk_regimes
//! ```
//!
//! # The pipeline and CLI
//!
//! For reproducible experiments the [`pipeline`] module (and the
//! `anchor-risk` binary wrapping it) splits the loop into content-addressed
//! stages driven by one JSON config: `gen`, `train`, `train-ae`, `score`,
//! `evaluate`, `report`. Artifacts embed the config hash and seed; reruns
//! with an identical config are byte-identical, and stale or missing inputs
//! are reported with the stage to rerun.

pub mod autoencoder;
pub mod benchmarks;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod metrics;
pub mod nn;
pub mod nonconformity;
pub mod pipeline;
pub mod regimes;
pub mod stats;
pub mod tensor;
pub mod train;
pub mod uncertainty;

pub use error::{Error, Result};
