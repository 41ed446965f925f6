//! Quantile binning of score channels and the four-way risk-regime map.
//!
//! Each score channel (uncertainty, non-conformity) is split at its 25th and
//! 75th percentiles into low / moderate / high bins; the pair of bins then
//! maps onto one of four risk regimes. Bins are rank-based, so any strictly
//! increasing transform of a score channel leaves the partition unchanged.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bin {
    Low,
    Moderate,
    High,
}

/// The four risk regimes, ordered from benign to hazardous.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Regime {
    #[serde(rename = "ID")]
    Id,
    #[serde(rename = "low")]
    LowRisk,
    #[serde(rename = "moderate")]
    ModerateRisk,
    #[serde(rename = "high")]
    HighRisk,
}

impl Regime {
    pub fn label(&self) -> &'static str {
        match self {
            Regime::Id => "ID",
            Regime::LowRisk => "low",
            Regime::ModerateRisk => "moderate",
            Regime::HighRisk => "high",
        }
    }
}

/// The 25th/75th percentile cut points of one score channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinThresholds {
    pub q25: f64,
    pub q75: f64,
}

/// Splits scores at the empirical 25th/75th percentiles (linear
/// interpolation). Boundary rule: `s <= q25` is low, `q25 < s <= q75`
/// moderate, above that high. With all-equal scores everything lands in low.
pub fn bin_scores(scores: &[f64]) -> Result<(BinThresholds, Vec<Bin>)> {
    if scores.is_empty() {
        return Err(Error::EmptyInput("bin_scores"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("bin_scores"));
    }
    let q25 = stats::percentile(scores, 25.0);
    let q75 = stats::percentile(scores, 75.0);
    let bins = scores
        .iter()
        .map(|&s| {
            if s <= q25 {
                Bin::Low
            } else if s <= q75 {
                Bin::Moderate
            } else {
                Bin::High
            }
        })
        .collect();
    Ok((BinThresholds { q25, q75 }, bins))
}

/// The fixed 9-cell map from (uncertainty bin, non-conformity bin) to regime:
///
/// | unc \ mnc | low      | moderate | high     |
/// |-----------|----------|----------|----------|
/// | low       | ID       | ID       | low      |
/// | moderate  | low      | low      | moderate |
/// | high      | moderate | moderate | high     |
pub fn assign_regime(unc: Bin, mnc: Bin) -> Regime {
    match (unc, mnc) {
        (Bin::Low, Bin::Low) | (Bin::Low, Bin::Moderate) => Regime::Id,
        (Bin::Low, Bin::High) | (Bin::Moderate, Bin::Low) | (Bin::Moderate, Bin::Moderate) => {
            Regime::LowRisk
        }
        (Bin::Moderate, Bin::High) | (Bin::High, Bin::Low) | (Bin::High, Bin::Moderate) => {
            Regime::ModerateRisk
        }
        (Bin::High, Bin::High) => Regime::HighRisk,
    }
}

/// Per-sample outcome of the two-channel binning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeAssignment {
    pub sample: usize,
    pub unc_bin: Bin,
    pub mnc_bin: Bin,
    pub regime: Regime,
}

/// Options for the two-channel assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RegimeOptions {
    /// When set, non-conformity quantiles are computed within each
    /// uncertainty bin instead of marginally over the whole test set.
    #[serde(default)]
    pub conditional_mnc: bool,
}

/// Bins both channels and applies the regime map to every sample.
pub fn assign_regimes(
    uncertainty: &[f64],
    nonconformity: &[f64],
    options: &RegimeOptions,
) -> Result<Vec<RegimeAssignment>> {
    if uncertainty.len() != nonconformity.len() {
        return Err(Error::ShapeMismatch {
            context: "assign_regimes",
            expected: format!("{} non-conformity scores", uncertainty.len()),
            actual: format!("{} non-conformity scores", nonconformity.len()),
        });
    }
    let (_, unc_bins) = bin_scores(uncertainty)?;

    let mnc_bins = if options.conditional_mnc {
        // Quantiles of the non-conformity channel within each uncertainty bin.
        let mut bins = vec![Bin::Low; nonconformity.len()];
        for level in [Bin::Low, Bin::Moderate, Bin::High] {
            let members: Vec<usize> = (0..unc_bins.len()).filter(|&i| unc_bins[i] == level).collect();
            if members.is_empty() {
                continue;
            }
            let scores: Vec<f64> = members.iter().map(|&i| nonconformity[i]).collect();
            let (_, group_bins) = bin_scores(&scores)?;
            for (&i, b) in members.iter().zip(group_bins) {
                bins[i] = b;
            }
        }
        bins
    } else {
        bin_scores(nonconformity)?.1
    };

    Ok(unc_bins
        .into_iter()
        .zip(mnc_bins)
        .enumerate()
        .map(|(sample, (u, m))| RegimeAssignment {
            sample,
            unc_bin: u,
            mnc_bin: m,
            regime: assign_regime(u, m),
        })
        .collect())
}

/// Ablation mode: maps one score channel alone onto the regime vocabulary by
/// quartiles (`<= q25` ID, `<= q50` low, `<= q75` moderate, else high).
pub fn single_score_regimes(scores: &[f64]) -> Result<Vec<Regime>> {
    if scores.is_empty() {
        return Err(Error::EmptyInput("single_score_regimes"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("single_score_regimes"));
    }
    let q25 = stats::percentile(scores, 25.0);
    let q50 = stats::percentile(scores, 50.0);
    let q75 = stats::percentile(scores, 75.0);
    Ok(scores
        .iter()
        .map(|&s| {
            if s <= q25 {
                Regime::Id
            } else if s <= q50 {
                Regime::LowRisk
            } else if s <= q75 {
                Regime::ModerateRisk
            } else {
                Regime::HighRisk
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn regime_matrix_matches_all_nine_cells() {
        use Bin::*;
        use Regime::*;
        let expected = [
            ((Low, Low), Id),
            ((Low, Moderate), Id),
            ((Low, High), LowRisk),
            ((Moderate, Low), LowRisk),
            ((Moderate, Moderate), LowRisk),
            ((Moderate, High), ModerateRisk),
            ((High, Low), ModerateRisk),
            ((High, Moderate), ModerateRisk),
            ((High, High), HighRisk),
        ];
        for ((u, m), want) in expected {
            assert_eq!(assign_regime(u, m), want, "cell ({u:?}, {m:?})");
        }
    }

    #[test]
    fn uniform_ranks_split_roughly_quarter_half_quarter() {
        let scores: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        let (_, bins) = bin_scores(&scores).unwrap();
        let low = bins.iter().filter(|b| **b == Bin::Low).count();
        let moderate = bins.iter().filter(|b| **b == Bin::Moderate).count();
        let high = bins.iter().filter(|b| **b == Bin::High).count();
        assert_eq!(low, 25);
        assert_eq!(moderate, 50);
        assert_eq!(high, 25);
    }

    #[test]
    fn all_equal_scores_bin_low() {
        let (thresholds, bins) = bin_scores(&[2.0; 9]).unwrap();
        assert_eq!(thresholds.q25, thresholds.q75);
        assert!(bins.iter().all(|b| *b == Bin::Low));
    }

    #[test]
    fn empty_input_rejected() {
        assert!(bin_scores(&[]).is_err());
        assert!(single_score_regimes(&[]).is_err());
    }

    #[test]
    fn binning_matches_sort_based_oracle() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let scores: Vec<f64> = (0..1000).map(|_| rng.gen::<f64>() * 10.0 - 5.0).collect();
        let (thresholds, bins) = bin_scores(&scores).unwrap();

        // Oracle: bin by comparing against percentiles of a sorted copy.
        let mut sorted = scores.clone();
        sorted.sort_by(f64::total_cmp);
        let q25 = crate::stats::percentile_sorted(&sorted, 25.0);
        let q75 = crate::stats::percentile_sorted(&sorted, 75.0);
        assert_eq!(thresholds.q25, q25);
        assert_eq!(thresholds.q75, q75);
        for (&s, &b) in scores.iter().zip(&bins) {
            let want = if s <= q25 {
                Bin::Low
            } else if s <= q75 {
                Bin::Moderate
            } else {
                Bin::High
            };
            assert_eq!(b, want);
        }
    }

    #[test]
    fn quartile_regimes_split_evenly() {
        let scores: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        let regimes = single_score_regimes(&scores).unwrap();
        for want in [Regime::Id, Regime::LowRisk, Regime::ModerateRisk, Regime::HighRisk] {
            assert_eq!(regimes.iter().filter(|r| **r == want).count(), 25);
        }
    }

    #[test]
    fn quartile_regimes_all_equal_gives_id() {
        let regimes = single_score_regimes(&[1.0; 10]).unwrap();
        assert!(regimes.iter().all(|r| *r == Regime::Id));
    }

    #[test]
    fn quartile_regimes_match_sort_oracle() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(18);
        let scores: Vec<f64> = (0..500).map(|_| rng.gen::<f64>()).collect();
        let got = single_score_regimes(&scores).unwrap();
        let mut sorted = scores.clone();
        sorted.sort_by(f64::total_cmp);
        let q = |p: f64| crate::stats::percentile_sorted(&sorted, p);
        let (q25, q50, q75) = (q(25.0), q(50.0), q(75.0));
        for (&s, &r) in scores.iter().zip(&got) {
            let want = if s <= q25 {
                Regime::Id
            } else if s <= q50 {
                Regime::LowRisk
            } else if s <= q75 {
                Regime::ModerateRisk
            } else {
                Regime::HighRisk
            };
            assert_eq!(r, want);
        }
    }

    #[test]
    fn conditional_mnc_bins_within_uncertainty_groups() {
        // Distinct uncertainty values 1..12 split 3/6/3; non-conformity is
        // constant within each uncertainty bin, so conditional binning puts
        // every sample in the low mnc bin while marginal binning does not.
        let unc: Vec<f64> = (1..=12).map(|i| i as f64).collect();
        let mnc: Vec<f64> = unc
            .iter()
            .map(|&u| {
                if u <= 3.75 {
                    1.0
                } else if u <= 9.25 {
                    100.0
                } else {
                    10_000.0
                }
            })
            .collect();
        let conditional = assign_regimes(&unc, &mnc, &RegimeOptions { conditional_mnc: true }).unwrap();
        assert!(conditional.iter().all(|a| a.mnc_bin == Bin::Low));
        let marginal = assign_regimes(&unc, &mnc, &RegimeOptions::default()).unwrap();
        assert!(marginal.iter().any(|a| a.mnc_bin != Bin::Low));
    }

    /// Lattice-valued scores keep exp() strictly monotone in f64, avoiding
    /// rounding collisions between near-equal values.
    fn lattice_scores(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec((-2000_i32..2000).prop_map(|i| i as f64 / 100.0), 1..max_len)
    }

    proptest! {
        /// Bins depend only on ranks: exp() preserves them exactly.
        #[test]
        fn binning_invariant_under_monotone_transform(scores in lattice_scores(200)) {
            let (_, base) = bin_scores(&scores).unwrap();
            let transformed: Vec<f64> = scores.iter().map(|s| s.exp()).collect();
            let (_, trans) = bin_scores(&transformed).unwrap();
            prop_assert_eq!(base, trans);
        }

        /// Quartile ablation bins are also rank-based.
        #[test]
        fn quartile_regimes_invariant_under_monotone_transform(scores in lattice_scores(150)) {
            let base = single_score_regimes(&scores).unwrap();
            let transformed: Vec<f64> = scores.iter().map(|s| (s / 4.0).exp()).collect();
            let trans = single_score_regimes(&transformed).unwrap();
            prop_assert_eq!(base, trans);
        }

        /// Relabeling samples permutes assignments without changing them.
        #[test]
        fn assignment_invariant_under_sample_permutation(
            pairs in proptest::collection::vec((0.0_f64..10.0, 0.0_f64..10.0), 2..100),
            seed in 0_u64..1000
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let unc: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let mnc: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let base = assign_regimes(&unc, &mnc, &RegimeOptions::default()).unwrap();

            let mut order: Vec<usize> = (0..pairs.len()).collect();
            order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let unc_p: Vec<f64> = order.iter().map(|&i| unc[i]).collect();
            let mnc_p: Vec<f64> = order.iter().map(|&i| mnc[i]).collect();
            let permuted = assign_regimes(&unc_p, &mnc_p, &RegimeOptions::default()).unwrap();

            for (pos, &orig) in order.iter().enumerate() {
                prop_assert_eq!(permuted[pos].regime, base[orig].regime);
            }
        }
    }
}
