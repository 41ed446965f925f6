//! Drive the file-based pipeline end to end: the same stages the CLI
//! exposes, producing the same artifacts in a run directory.
//!
//! ```bash
//! cargo run --release -p anchor-risk --example full_pipeline
//! ```

use anchor_risk::config::{Ablation, ExperimentConfig};
use anchor_risk::pipeline;

fn main() -> anchor_risk::Result<()> {
    let dir = std::env::temp_dir().join("anchor_risk_full_pipeline");
    let body = serde_json::json!({
        "seed": 3,
        "output_dir": dir.join("run"),
        "dataset": { "source": { "kind": "function", "name": "f2" } },
        "model": { "hidden_dims": [64, 64] },
        "train": { "epochs": 1000, "batch_size": 32, "learning_rate": 0.003, "loss": "mae" }
    });
    std::fs::create_dir_all(&dir)?;
    let config_path = dir.join("config.json");
    std::fs::write(&config_path, serde_json::to_string_pretty(&body)?)?;

    let config = ExperimentConfig::load(&config_path)?;
    pipeline::run_gen(&config)?;
    pipeline::run_train(&config)?;
    pipeline::run_score(&config)?;
    let full = pipeline::run_evaluate(&config, Ablation::None, None)?;
    let uq_only = pipeline::run_evaluate(&config, Ablation::UqOnly, None)?;
    pipeline::run_report(std::slice::from_ref(&config.output_dir), &config.output_dir.join("summary.json"))?;

    println!();
    println!("run directory: {}", config.output_dir.display());
    println!(
        "full map:  FN {:.2}% FP {:.2}%  |  uq-only ablation: FN {:.2}% FP {:.2}%",
        full.metrics.fn_pct, full.metrics.fp_pct, uq_only.metrics.fn_pct, uq_only.metrics.fp_pct
    );
    println!("the same flow via the binary:");
    println!("  anchor-risk gen --config {}", config_path.display());
    println!("  anchor-risk train --config {}", config_path.display());
    println!("  anchor-risk score --config {}", config_path.display());
    println!("  anchor-risk evaluate --config {}", config_path.display());
    println!("  anchor-risk report --config {}", config_path.display());
    Ok(())
}
