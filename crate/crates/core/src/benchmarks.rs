//! Synthetic benchmark functions and target-percentile split constructions.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::stats;
use crate::tensor::Tensor2;

/// Closed-form regression benchmarks: four 1D functions plus the 2D
/// six-hump camel and Levy functions on their conventional domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchmarkFn {
    F1,
    F2,
    F3,
    F4,
    Camel,
    Levy,
}

impl BenchmarkFn {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "f1" => Ok(Self::F1),
            "f2" => Ok(Self::F2),
            "f3" => Ok(Self::F3),
            "f4" => Ok(Self::F4),
            "camel" => Ok(Self::Camel),
            "levy" => Ok(Self::Levy),
            other => Err(Error::UnknownFunction(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::F1 => "f1",
            Self::F2 => "f2",
            Self::F3 => "f3",
            Self::F4 => "f4",
            Self::Camel => "camel",
            Self::Levy => "levy",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::F1 | Self::F2 | Self::F3 | Self::F4 => 1,
            Self::Camel | Self::Levy => 2,
        }
    }

    /// Per-dimension `(low, high)` bounds of the conventional domain.
    pub fn domain(&self) -> Vec<(f64, f64)> {
        match self {
            Self::F1 => vec![(0.0, 5.0)],
            Self::F2 => vec![(-0.5, 2.5)],
            Self::F3 => vec![(-5.0, 5.0)],
            Self::F4 => vec![(-1.0, 2.0)],
            Self::Camel => vec![(-3.0, 3.0), (-2.0, 2.0)],
            Self::Levy => vec![(-10.0, 10.0), (-10.0, 10.0)],
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Self::F1 => {
                let x = x[0];
                if !(2.25..=3.01).contains(&x) {
                    x * x
                } else {
                    x * x - 20.0
                }
            }
            Self::F2 => (2.0 * std::f64::consts::PI * x[0]).sin(),
            Self::F3 => {
                let (a, b, c) = (20.0, 0.2, 2.0 * std::f64::consts::PI);
                let x = x[0];
                a * (-b * x).exp() + (c * x).cos().exp() - a - 1.0_f64.exp()
            }
            Self::F4 => {
                let x = x[0];
                x.sin() * (5.0 * x).cos() * (22.0 * x).cos()
            }
            Self::Camel => {
                let (x1, x2) = (x[0], x[1]);
                (4.0 - 2.1 * x1 * x1 + x1.powi(4) / 3.0) * x1 * x1
                    + x1 * x2
                    + (-4.0 + 4.0 * x2 * x2) * x2 * x2
            }
            Self::Levy => {
                let pi = std::f64::consts::PI;
                let w: Vec<f64> = x.iter().map(|xi| 1.0 + (xi - 1.0) / 4.0).collect();
                let d = w.len();
                let mut sum = (pi * w[0]).sin().powi(2);
                for wi in &w[..d - 1] {
                    sum += (wi - 1.0).powi(2) * (1.0 + 10.0 * (pi * wi + 1.0).sin().powi(2));
                }
                let wd = w[d - 1];
                sum + (wd - 1.0).powi(2) * (1.0 + (2.0 * pi * wd).sin().powi(2))
            }
        }
    }
}

/// Samples `n` points uniformly on the function's domain (or an override) and
/// labels them with the exact closed form.
pub fn gen_function(
    func: BenchmarkFn,
    n: usize,
    domain_override: Option<Vec<(f64, f64)>>,
    seed: u64,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::EmptyInput("gen_function: n must be >= 1"));
    }
    let domain = match domain_override {
        Some(d) => {
            if d.len() != func.dim() {
                return Err(Error::ShapeMismatch {
                    context: "gen_function domain override",
                    expected: format!("{} dims", func.dim()),
                    actual: format!("{} dims", d.len()),
                });
            }
            if d.iter().any(|(lo, hi)| lo >= hi) {
                return Err(Error::InvalidConfig("domain bounds must satisfy low < high".into()));
            }
            d
        }
        None => func.domain(),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    for _ in 0..n {
        let x: Vec<f64> = domain
            .iter()
            .map(|&(lo, hi)| lo + rng.gen::<f64>() * (hi - lo))
            .collect();
        targets.push(func.eval(&x));
        rows.push(x);
    }
    Dataset::new(
        Tensor2::from_rows(&rows)?,
        targets,
        format!("{}:uniform:n={n}:seed={seed}", func.name()),
    )
}

/// Evenly spaced evaluation grid over the full domain, endpoints included.
///
/// For 1D functions the grid has exactly `m` points. For 2D functions it is
/// the smallest `s x s` lattice with `s*s >= m`, evenly spaced per axis.
pub fn make_eval_grid(func: BenchmarkFn, m: usize) -> Result<Dataset> {
    if m < 2 {
        return Err(Error::InvalidConfig("make_eval_grid: m must be >= 2".into()));
    }
    let domain = func.domain();
    let rows: Vec<Vec<f64>> = match func.dim() {
        1 => {
            let (lo, hi) = domain[0];
            linspace(lo, hi, m).into_iter().map(|x| vec![x]).collect()
        }
        2 => {
            let side = (m as f64).sqrt().ceil() as usize;
            let xs = linspace(domain[0].0, domain[0].1, side.max(2));
            let ys = linspace(domain[1].0, domain[1].1, side.max(2));
            xs.iter()
                .flat_map(|&x| ys.iter().map(move |&y| vec![x, y]))
                .collect()
        }
        d => {
            return Err(Error::InvalidConfig(format!(
                "make_eval_grid: unsupported dimension {d}"
            )))
        }
    };
    let targets: Vec<f64> = rows.iter().map(|x| func.eval(x)).collect();
    Dataset::new(
        Tensor2::from_rows(&rows)?,
        targets,
        format!("{}:grid:m={m}", func.name()),
    )
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    debug_assert!(n >= 2);
    let step = (hi - lo) / (n - 1) as f64;
    let mut points: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
    points[n - 1] = hi;
    points
}

/// How training rows are selected by target percentile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum SplitMode {
    /// Train on targets at or below `low_pct` plus strictly above `high_pct`,
    /// leaving the `(low_pct, high_pct]` band unseen.
    Gaps { low_pct: f64, high_pct: f64 },
    /// Train on targets at or below `cut_pct`.
    Tails { cut_pct: f64 },
    /// Train on targets whose percentile lies in `[low_pct, high_pct]`.
    CustomInterval { low_pct: f64, high_pct: f64 },
}

impl SplitMode {
    pub fn gaps_default() -> Self {
        Self::Gaps {
            low_pct: 30.0,
            high_pct: 60.0,
        }
    }

    pub fn tails_default() -> Self {
        Self::Tails { cut_pct: 70.0 }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            SplitMode::Gaps { low_pct, high_pct } | SplitMode::CustomInterval { low_pct, high_pct } => {
                (0.0..=100.0).contains(&low_pct)
                    && (0.0..=100.0).contains(&high_pct)
                    && low_pct <= high_pct
            }
            SplitMode::Tails { cut_pct } => (0.0..=100.0).contains(&cut_pct),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(
                "split percentiles must be ordered and within [0, 100]".into(),
            ))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    #[serde(flatten)]
    pub mode: SplitMode,
    pub seed: u64,
}

/// Partitions a dataset into `(train, held_out)` by target percentile only.
///
/// Percentile thresholds are computed over the full target vector with
/// linear interpolation; features never influence membership. The held-out
/// part is the complement and may be empty for permissive specs.
pub fn split_targets(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    spec.mode.validate()?;
    let targets = ds.targets();
    let in_train: Vec<bool> = match spec.mode {
        SplitMode::Gaps { low_pct, high_pct } => {
            let lo = stats::percentile(targets, low_pct);
            let hi = stats::percentile(targets, high_pct);
            targets.iter().map(|&y| y <= lo || y > hi).collect()
        }
        SplitMode::Tails { cut_pct } => {
            let cut = stats::percentile(targets, cut_pct);
            targets.iter().map(|&y| y <= cut).collect()
        }
        SplitMode::CustomInterval { low_pct, high_pct } => {
            let lo = stats::percentile(targets, low_pct);
            let hi = stats::percentile(targets, high_pct);
            targets.iter().map(|&y| y >= lo && y <= hi).collect()
        }
    };

    let train_idx: Vec<usize> = (0..ds.len()).filter(|&i| in_train[i]).collect();
    let test_idx: Vec<usize> = (0..ds.len()).filter(|&i| !in_train[i]).collect();
    if train_idx.is_empty() {
        return Err(Error::InvalidConfig(
            "split leaves the training set empty".into(),
        ));
    }
    if test_idx.is_empty() {
        return Err(Error::EmptyInput(
            "split leaves the held-out set empty; widen the excluded band",
        ));
    }
    let train = ds.select(&train_idx, format!("{}:train", ds.provenance()))?;
    let held_out = ds.select(&test_idx, format!("{}:heldout", ds.provenance()))?;
    Ok((train, held_out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f2_closed_form_at_quarter() {
        assert!((BenchmarkFn::F2.eval(&[0.25]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn f1_dip_inside_band() {
        assert!((BenchmarkFn::F1.eval(&[2.5]) + 13.75).abs() < 1e-12);
        // Just outside the band the parabola is unshifted.
        assert!((BenchmarkFn::F1.eval(&[2.0]) - 4.0).abs() < 1e-12);
        assert!((BenchmarkFn::F1.eval(&[3.5]) - 12.25).abs() < 1e-12);
    }

    #[test]
    fn f4_zero_at_origin() {
        assert_eq!(BenchmarkFn::F4.eval(&[0.0]), 0.0);
    }

    #[test]
    fn f3_matches_direct_formula() {
        let x = 1.3_f64;
        let expected = 20.0 * (-0.2 * x).exp()
            + (2.0 * std::f64::consts::PI * x).cos().exp()
            - 20.0
            - 1.0_f64.exp();
        assert!((BenchmarkFn::F3.eval(&[x]) - expected).abs() < 1e-12);
    }

    #[test]
    fn camel_and_levy_minima() {
        // Six-hump camel global minimum is about -1.0316 at (0.0898, -0.7126).
        let v = BenchmarkFn::Camel.eval(&[0.0898, -0.7126]);
        assert!((v + 1.0316).abs() < 1e-3);
        // Levy global minimum is 0 at (1, 1).
        assert!(BenchmarkFn::Levy.eval(&[1.0, 1.0]).abs() < 1e-12);
    }

    #[test]
    fn grid_f2_five_points() {
        let grid = make_eval_grid(BenchmarkFn::F2, 5).unwrap();
        let xs: Vec<f64> = grid.features().row_iter().map(|r| r[0]).collect();
        assert_eq!(xs, vec![-0.5, 0.25, 1.0, 1.75, 2.5]);
        for (i, &x) in xs.iter().enumerate() {
            assert_eq!(grid.targets()[i], BenchmarkFn::F2.eval(&[x]));
        }
    }

    #[test]
    fn grid_includes_endpoints() {
        for f in [BenchmarkFn::F1, BenchmarkFn::F2, BenchmarkFn::F3, BenchmarkFn::F4] {
            let grid = make_eval_grid(f, 37).unwrap();
            let (lo, hi) = f.domain()[0];
            let xs: Vec<f64> = grid.features().row_iter().map(|r| r[0]).collect();
            assert_eq!(xs[0], lo);
            assert_eq!(*xs.last().unwrap(), hi);
        }
    }

    #[test]
    fn gen_function_deterministic_and_exact() {
        let a = gen_function(BenchmarkFn::F3, 50, None, 11).unwrap();
        let b = gen_function(BenchmarkFn::F3, 50, None, 11).unwrap();
        assert_eq!(a.features(), b.features());
        for (x, &y) in a.features().row_iter().zip(a.targets()) {
            assert!((BenchmarkFn::F3.eval(x) - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn gen_function_rejects_unknown_name() {
        assert!(BenchmarkFn::parse("f9").is_err());
    }

    fn ramp_dataset() -> Dataset {
        let rows: Vec<Vec<f64>> = (1..=100).map(|i| vec![i as f64]).collect();
        let targets: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        Dataset::new(Tensor2::from_rows(&rows).unwrap(), targets, "ramp").unwrap()
    }

    #[test]
    fn tails_split_takes_bottom_seventy() {
        let ds = ramp_dataset();
        let spec = SplitSpec {
            mode: SplitMode::tails_default(),
            seed: 0,
        };
        let (train, heldout) = split_targets(&ds, &spec).unwrap();
        let mut ys = train.targets().to_vec();
        ys.sort_by(f64::total_cmp);
        assert_eq!(ys.len(), 70);
        assert_eq!(ys[0], 1.0);
        assert_eq!(ys[69], 70.0);
        assert_eq!(heldout.len(), 30);
    }

    #[test]
    fn gaps_split_excludes_mid_band() {
        let ds = ramp_dataset();
        let spec = SplitSpec {
            mode: SplitMode::gaps_default(),
            seed: 0,
        };
        let (train, heldout) = split_targets(&ds, &spec).unwrap();
        assert_eq!(train.len(), 70);
        assert!(train.targets().iter().all(|&y| y <= 30.7 || y > 60.4));
        assert_eq!(heldout.len(), 30);
        assert!(heldout.targets().iter().all(|&y| y > 30.7 && y <= 60.4));
    }

    #[test]
    fn split_matches_sort_based_oracle() {
        let ds = gen_function(BenchmarkFn::F4, 333, None, 5).unwrap();
        let spec = SplitSpec {
            mode: SplitMode::gaps_default(),
            seed: 0,
        };
        let (train, _) = split_targets(&ds, &spec).unwrap();

        // Oracle: explicit percentile thresholds from a sorted copy.
        let mut sorted = ds.targets().to_vec();
        sorted.sort_by(f64::total_cmp);
        let lo = stats::percentile_sorted(&sorted, 30.0);
        let hi = stats::percentile_sorted(&sorted, 60.0);
        let expected: Vec<f64> = ds
            .targets()
            .iter()
            .copied()
            .filter(|&y| y <= lo || y > hi)
            .collect();
        assert_eq!(train.targets(), expected.as_slice());
    }

    #[test]
    fn split_ignores_feature_permutation() {
        // Membership depends on target rank only: permuting feature values
        // leaves the selected target multiset unchanged.
        let ds = ramp_dataset();
        let perm_rows: Vec<Vec<f64>> = (0..ds.len()).rev().map(|i| ds.features().row(i).to_vec()).collect();
        let permuted = Dataset::new(
            Tensor2::from_rows(&perm_rows).unwrap(),
            ds.targets().to_vec(),
            "perm",
        )
        .unwrap();
        let spec = SplitSpec {
            mode: SplitMode::tails_default(),
            seed: 0,
        };
        let (a, _) = split_targets(&ds, &spec).unwrap();
        let (b, _) = split_targets(&permuted, &spec).unwrap();
        assert_eq!(a.targets(), b.targets());
    }

    #[test]
    fn split_rejects_empty_train() {
        // Percentile 50 of 1..100 interpolates to 50.5, which no target
        // equals, so the [50, 50] interval selects nothing.
        let ds = ramp_dataset();
        let spec = SplitSpec {
            mode: SplitMode::CustomInterval {
                low_pct: 50.0,
                high_pct: 50.0,
            },
            seed: 0,
        };
        assert!(split_targets(&ds, &spec).is_err());
    }

    #[test]
    fn split_rejects_out_of_range_percentiles() {
        let ds = ramp_dataset();
        let spec = SplitSpec {
            mode: SplitMode::Gaps {
                low_pct: 60.0,
                high_pct: 30.0,
            },
            seed: 0,
        };
        assert!(split_targets(&ds, &spec).is_err());
    }
}
