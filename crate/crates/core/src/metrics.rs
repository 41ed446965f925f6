//! Detector evaluation: missed failures, false alarms, and the percentile
//! overlap between neighboring risk regimes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regimes::Regime;
use crate::stats;

/// One evaluated sample: its assigned regime and observed risk (absolute
/// prediction error by default).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskRecord {
    pub sample: usize,
    pub regime: Regime,
    pub true_risk: f64,
}

impl RiskRecord {
    pub fn new(sample: usize, regime: Regime, true_risk: f64) -> Result<Self> {
        if !true_risk.is_finite() || true_risk < 0.0 {
            return Err(Error::NonFinite("RiskRecord::true_risk"));
        }
        Ok(Self {
            sample,
            regime,
            true_risk,
        })
    }
}

/// The four-metric evaluation plus per-regime counts and warnings.
///
/// `c_low` / `c_high` are absent when a regime they depend on is empty, and
/// carry `f64::INFINITY` (serialized as the string `"inf"`) when the
/// denominator percentile is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub fn_pct: f64,
    pub fp_pct: f64,
    #[serde(
        serialize_with = "serialize_opt_metric",
        deserialize_with = "deserialize_opt_metric",
        default
    )]
    pub c_low: Option<f64>,
    #[serde(
        serialize_with = "serialize_opt_metric",
        deserialize_with = "deserialize_opt_metric",
        default
    )]
    pub c_high: Option<f64>,
    pub regime_counts: BTreeMap<String, usize>,
    pub warnings: Vec<String>,
}

fn serialize_opt_metric<S: serde::Serializer>(
    value: &Option<f64>,
    serializer: S,
) -> std::result::Result<S::Ok, S::Error> {
    match value {
        None => serializer.serialize_none(),
        Some(v) if v.is_infinite() => serializer.serialize_str("inf"),
        Some(v) => serializer.serialize_f64(*v),
    }
}

fn deserialize_opt_metric<'de, D: serde::Deserializer<'de>>(
    deserializer: D,
) -> std::result::Result<Option<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Number(f64),
        Text(String),
    }
    let raw: Option<Raw> = Option::deserialize(deserializer)?;
    Ok(match raw {
        None => None,
        Some(Raw::Number(v)) => Some(v),
        Some(Raw::Text(s)) if s == "inf" => Some(f64::INFINITY),
        Some(Raw::Text(s)) => {
            return Err(serde::de::Error::custom(format!(
                "unexpected metric value `{s}`"
            )))
        }
    })
}

fn risks(records: &[RiskRecord]) -> Vec<f64> {
    records.iter().map(|r| r.true_risk).collect()
}

fn regime_risks(records: &[RiskRecord], regime: Regime) -> Vec<f64> {
    records
        .iter()
        .filter(|r| r.regime == regime)
        .map(|r| r.true_risk)
        .collect()
}

/// Percentage of samples placed in the ID or low-risk regimes whose risk is
/// strictly above the 80th percentile of all risks. The denominator is the
/// size of that benign-side group; with no such samples the metric is 0.
pub fn false_negatives(records: &[RiskRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptyInput("false_negatives"));
    }
    let threshold = stats::percentile(&risks(records), 80.0);
    let benign: Vec<&RiskRecord> = records
        .iter()
        .filter(|r| matches!(r.regime, Regime::Id | Regime::LowRisk))
        .collect();
    if benign.is_empty() {
        return Ok(0.0);
    }
    let missed = benign.iter().filter(|r| r.true_risk > threshold).count();
    Ok(100.0 * missed as f64 / benign.len() as f64)
}

/// Percentage of samples flagged moderate or high risk whose risk is
/// strictly below the 20th percentile of all risks.
pub fn false_positives(records: &[RiskRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptyInput("false_positives"));
    }
    let threshold = stats::percentile(&risks(records), 20.0);
    let flagged: Vec<&RiskRecord> = records
        .iter()
        .filter(|r| matches!(r.regime, Regime::ModerateRisk | Regime::HighRisk))
        .collect();
    if flagged.is_empty() {
        return Ok(0.0);
    }
    let harmless = flagged.iter().filter(|r| r.true_risk < threshold).count();
    Ok(100.0 * harmless as f64 / flagged.len() as f64)
}

/// `P90(risk | ID) / P10(risk | low risk)`: values above 1 signal overlap
/// between the two benign regimes. `None` when either regime is empty;
/// `+inf` when the denominator percentile is zero.
pub fn confusion_low(records: &[RiskRecord]) -> Option<f64> {
    confusion(records, Regime::Id, Regime::LowRisk)
}

/// Same construction for the moderate vs high risk regimes.
pub fn confusion_high(records: &[RiskRecord]) -> Option<f64> {
    confusion(records, Regime::ModerateRisk, Regime::HighRisk)
}

fn confusion(records: &[RiskRecord], lower: Regime, upper: Regime) -> Option<f64> {
    let lo = regime_risks(records, lower);
    let hi = regime_risks(records, upper);
    if lo.is_empty() || hi.is_empty() {
        return None;
    }
    let p90 = stats::percentile(&lo, 90.0);
    let p10 = stats::percentile(&hi, 10.0);
    if p10 == 0.0 {
        return Some(f64::INFINITY);
    }
    Some(p90 / p10)
}

/// Computes the whole metric suite over the records.
pub fn evaluate(records: &[RiskRecord]) -> Result<MetricsReport> {
    if records.is_empty() {
        return Err(Error::EmptyInput("metrics::evaluate"));
    }
    let mut warnings = Vec::new();

    let benign_count = records
        .iter()
        .filter(|r| matches!(r.regime, Regime::Id | Regime::LowRisk))
        .count();
    if benign_count == 0 {
        warnings.push("no ID/low-risk samples; FN reported as 0".to_string());
    }
    if benign_count == records.len() {
        warnings.push("no moderate/high-risk samples; FP reported as 0".to_string());
    }

    let fn_pct = false_negatives(records)?;
    let fp_pct = false_positives(records)?;

    let c_low = confusion_low(records);
    let c_high = confusion_high(records);
    for (name, value) in [("C_low", c_low), ("C_high", c_high)] {
        match value {
            None => warnings.push(format!("{name} undefined: an involved regime is empty")),
            Some(v) if v.is_infinite() => {
                warnings.push(format!("{name} infinite: denominator percentile is zero"))
            }
            _ => {}
        }
    }

    let mut regime_counts = BTreeMap::new();
    for regime in [Regime::Id, Regime::LowRisk, Regime::ModerateRisk, Regime::HighRisk] {
        regime_counts.insert(
            regime.label().to_string(),
            records.iter().filter(|r| r.regime == regime).count(),
        );
    }

    Ok(MetricsReport {
        fn_pct,
        fp_pct,
        c_low,
        c_high,
        regime_counts,
        warnings,
    })
}
