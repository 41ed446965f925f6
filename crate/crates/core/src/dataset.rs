//! Labeled regression datasets: construction, CSV ingestion, standardization.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor2;

/// A feature matrix paired with continuous targets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dataset {
    features: Tensor2,
    targets: Vec<f64>,
    column_names: Option<Vec<String>>,
    provenance: String,
}

impl Dataset {
    pub fn new(features: Tensor2, targets: Vec<f64>, provenance: impl Into<String>) -> Result<Self> {
        if features.rows() == 0 {
            return Err(Error::EmptyInput("Dataset::new"));
        }
        if features.rows() != targets.len() {
            return Err(Error::ShapeMismatch {
                context: "Dataset::new",
                expected: format!("{} targets", features.rows()),
                actual: format!("{} targets", targets.len()),
            });
        }
        if targets.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("Dataset targets"));
        }
        Ok(Self {
            features,
            targets,
            column_names: None,
            provenance: provenance.into(),
        })
    }

    pub fn with_column_names(mut self, names: Vec<String>) -> Self {
        self.column_names = Some(names);
        self
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.features.rows()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    #[inline]
    pub fn features(&self) -> &Tensor2 {
        &self.features
    }

    #[inline]
    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    #[inline]
    pub fn sample(&self, i: usize) -> (&[f64], f64) {
        (self.features.row(i), self.targets[i])
    }

    pub fn column_names(&self) -> Option<&[String]> {
        self.column_names.as_deref()
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// New dataset keeping only the given row indices.
    pub fn select(&self, indices: &[usize], provenance: impl Into<String>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptyInput("Dataset::select"));
        }
        let rows: Vec<Vec<f64>> = indices.iter().map(|&i| self.features.row(i).to_vec()).collect();
        let targets: Vec<f64> = indices.iter().map(|&i| self.targets[i]).collect();
        let mut ds = Dataset::new(Tensor2::from_rows(&rows)?, targets, provenance)?;
        ds.column_names = self.column_names.clone();
        Ok(ds)
    }

    /// Concatenates two datasets row-wise, e.g. to extend an anchor pool
    /// with a calibration set. Feature dimensions must match.
    pub fn concat(&self, other: &Dataset, provenance: impl Into<String>) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::ShapeMismatch {
                context: "Dataset::concat",
                expected: format!("{} features", self.dim()),
                actual: format!("{} features", other.dim()),
            });
        }
        let rows: Vec<Vec<f64>> = self
            .features
            .row_iter()
            .chain(other.features.row_iter())
            .map(|r| r.to_vec())
            .collect();
        let mut targets = self.targets.clone();
        targets.extend_from_slice(&other.targets);
        let mut ds = Dataset::new(Tensor2::from_rows(&rows)?, targets, provenance)?;
        ds.column_names = self.column_names.clone();
        Ok(ds)
    }

    /// Replaces the feature matrix, keeping targets and metadata. Shapes must match.
    pub fn with_features(&self, features: Tensor2) -> Result<Self> {
        if features.rows() != self.len() || features.cols() != self.dim() {
            return Err(Error::ShapeMismatch {
                context: "Dataset::with_features",
                expected: format!("{}x{}", self.len(), self.dim()),
                actual: format!("{}x{}", features.rows(), features.cols()),
            });
        }
        Ok(Self {
            features,
            targets: self.targets.clone(),
            column_names: self.column_names.clone(),
            provenance: self.provenance.clone(),
        })
    }
}

/// Result of a CSV load: the parsed dataset plus row-level diagnostics.
#[derive(Debug)]
pub struct CsvLoad {
    pub dataset: Dataset,
    /// 1-based line numbers of rows dropped for missing (empty) cells.
    pub skipped_lines: Vec<usize>,
}

/// Loads a comma-separated file with a header row into a [`Dataset`].
///
/// `target_column` names the header column holding the regression target;
/// every other column becomes a feature. Rows containing empty cells are
/// skipped and reported in [`CsvLoad::skipped_lines`]; a non-numeric,
/// non-empty cell is a hard error carrying its line number.
pub fn load_csv(path: &Path, target_column: &str) -> Result<CsvLoad> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();

    let (_, header) = lines.next().ok_or(Error::EmptyInput("csv file"))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let target_idx = columns
        .iter()
        .position(|c| *c == target_column)
        .ok_or_else(|| Error::Csv {
            line: 1,
            message: format!("target column `{target_column}` not found in header"),
        })?;

    let feature_names: Vec<String> = columns
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != target_idx)
        .map(|(_, c)| c.to_string())
        .collect();

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut targets: Vec<f64> = Vec::new();
    let mut skipped_lines = Vec::new();

    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != columns.len() {
            return Err(Error::Csv {
                line: line_no,
                message: format!("expected {} cells, got {}", columns.len(), cells.len()),
            });
        }
        if cells.iter().any(|c| c.is_empty()) {
            skipped_lines.push(line_no);
            continue;
        }
        let mut row = Vec::with_capacity(columns.len() - 1);
        let mut target = 0.0;
        for (i, cell) in cells.iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| Error::Csv {
                line: line_no,
                message: format!("non-numeric cell `{cell}` in column `{}`", columns[i]),
            })?;
            if !value.is_finite() {
                return Err(Error::Csv {
                    line: line_no,
                    message: format!("non-finite value in column `{}`", columns[i]),
                });
            }
            if i == target_idx {
                target = value;
            } else {
                row.push(value);
            }
        }
        rows.push(row);
        targets.push(target);
    }

    if rows.is_empty() {
        return Err(Error::EmptyInput("csv file has no usable data rows"));
    }

    let provenance = format!("csv:{}", path.display());
    let dataset = Dataset::new(Tensor2::from_rows(&rows)?, targets, provenance)?
        .with_column_names(feature_names);
    Ok(CsvLoad {
        dataset,
        skipped_lines,
    })
}

/// Per-feature z-scoring fitted on one split and applied to others, so test
/// rows never leak into the statistics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    /// Fits means and sample standard deviations per feature column.
    /// Constant columns get a unit scale so they pass through centered.
    pub fn fit(features: &Tensor2) -> Result<Self> {
        if features.rows() == 0 {
            return Err(Error::EmptyInput("Standardizer::fit"));
        }
        let n = features.rows() as f64;
        let d = features.cols();
        let mut means = vec![0.0; d];
        for row in features.row_iter() {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n;
        }
        let mut stds = vec![0.0; d];
        if features.rows() > 1 {
            for row in features.row_iter() {
                for ((s, v), m) in stds.iter_mut().zip(row).zip(&means) {
                    let c = v - m;
                    *s += c * c;
                }
            }
            for s in &mut stds {
                *s = (*s / (n - 1.0)).sqrt();
            }
        }
        for s in &mut stds {
            if *s == 0.0 {
                *s = 1.0;
            }
        }
        Ok(Self { means, stds })
    }

    pub fn transform(&self, features: &Tensor2) -> Result<Tensor2> {
        if features.cols() != self.means.len() {
            return Err(Error::ShapeMismatch {
                context: "Standardizer::transform",
                expected: format!("{} columns", self.means.len()),
                actual: format!("{} columns", features.cols()),
            });
        }
        let rows: Vec<Vec<f64>> = features
            .row_iter()
            .map(|row| {
                row.iter()
                    .zip(&self.means)
                    .zip(&self.stds)
                    .map(|((v, m), s)| (v - m) / s)
                    .collect()
            })
            .collect();
        Tensor2::from_rows(&rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;

    fn write_temp(content: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir();
        let path = dir.join(format!("anchor_risk_csv_{}.csv", stats::fnv1a64(content.as_bytes())));
        fs::write(&path, content).unwrap();
        path
    }

    #[test]
    fn csv_round_trips_hand_written_rows() {
        let path = write_temp("a,b,y\n1.0,2.0,3.0\n4.0,5.0,6.0\n7.5,-1.25,0.0\n");
        let load = load_csv(&path, "y").unwrap();
        assert_eq!(load.dataset.len(), 3);
        assert_eq!(load.dataset.dim(), 2);
        assert_eq!(load.dataset.features().row(2), &[7.5, -1.25]);
        assert_eq!(load.dataset.targets(), &[3.0, 6.0, 0.0]);
        assert_eq!(load.dataset.column_names().unwrap(), &["a".to_string(), "b".to_string()]);
        assert!(load.skipped_lines.is_empty());
    }

    #[test]
    fn csv_skips_rows_with_missing_cells() {
        let path = write_temp("a,y\n1.0,2.0\n,3.0\n4.0,5.0\n");
        let load = load_csv(&path, "y").unwrap();
        assert_eq!(load.dataset.len(), 2);
        assert_eq!(load.skipped_lines, vec![3]);
    }

    #[test]
    fn csv_errors_on_non_numeric_cell_with_line_number() {
        let path = write_temp("a,y\n1.0,2.0\nbogus,3.0\n");
        match load_csv(&path, "y") {
            Err(Error::Csv { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected csv error, got {other:?}"),
        }
    }

    #[test]
    fn csv_rejects_empty_file() {
        let path = write_temp("");
        assert!(load_csv(&path, "y").is_err());
    }

    #[test]
    fn csv_rejects_missing_target_column() {
        let path = write_temp("a,b\n1.0,2.0\n");
        assert!(load_csv(&path, "y").is_err());
    }

    #[test]
    fn standardizer_zero_mean_unit_std_on_fit_split() {
        let features = Tensor2::from_rows(&[
            vec![1.0, 10.0],
            vec![2.0, 20.0],
            vec![3.0, 40.0],
            vec![4.0, 80.0],
        ])
        .unwrap();
        let std = Standardizer::fit(&features).unwrap();
        let z = std.transform(&features).unwrap();
        for c in 0..2 {
            let col: Vec<f64> = (0..z.rows()).map(|r| z.get(r, c)).collect();
            assert!(stats::mean(&col).abs() < 1e-9);
            assert!((stats::sample_std(&col) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn standardizer_does_not_leak_into_shifted_split() {
        let train = Tensor2::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let test = Tensor2::from_rows(&[vec![10.0], vec![11.0], vec![12.0]]).unwrap();
        let std = Standardizer::fit(&train).unwrap();
        let z = std.transform(&test).unwrap();
        let col: Vec<f64> = (0..z.rows()).map(|r| z.get(r, 0)).collect();
        // Test mean stays far from zero: statistics came from the train split.
        assert!(stats::mean(&col) > 5.0);
    }

    #[test]
    fn dataset_rejects_misaligned_targets() {
        let f = Tensor2::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        assert!(Dataset::new(f, vec![1.0], "t").is_err());
    }

    #[test]
    fn concat_appends_rows_and_checks_dims() {
        let a = Dataset::new(
            Tensor2::from_rows(&[vec![1.0], vec![2.0]]).unwrap(),
            vec![10.0, 20.0],
            "a",
        )
        .unwrap();
        let b = Dataset::new(Tensor2::from_rows(&[vec![3.0]]).unwrap(), vec![30.0], "b").unwrap();
        let joined = a.concat(&b, "a+b").unwrap();
        assert_eq!(joined.len(), 3);
        assert_eq!(joined.targets(), &[10.0, 20.0, 30.0]);
        assert_eq!(joined.features().row(2), &[3.0]);

        let wide = Dataset::new(
            Tensor2::from_rows(&[vec![1.0, 2.0]]).unwrap(),
            vec![0.0],
            "wide",
        )
        .unwrap();
        assert!(a.concat(&wide, "bad").is_err());
    }
}
