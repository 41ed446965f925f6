//! Small shared statistics helpers: percentiles, means, standard deviations.

/// Empirical percentile with linear interpolation between order statistics.
///
/// `p` is in `[0, 100]`. For a sorted sample `a[0..n]` the rank is
/// `h = p/100 * (n-1)` and the result interpolates between `a[floor(h)]`
/// and `a[ceil(h)]`.
///
/// Panics if `values` is empty.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    assert!(!values.is_empty(), "percentile of empty slice");
    assert!((0.0..=100.0).contains(&p), "percentile p out of [0, 100]");
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    percentile_sorted(&sorted, p)
}

/// Same as [`percentile`] but assumes `sorted` is already ascending.
pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty slice");
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = p / 100.0 * (n - 1) as f64;
    let lo = h.floor() as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

pub fn mean(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "mean of empty slice");
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (divisor `n - 1`).
///
/// Panics if fewer than two values are given.
pub fn sample_std(values: &[f64]) -> f64 {
    assert!(values.len() >= 2, "sample std needs at least two values");
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

/// FNV-1a 64-bit hash, used for stable content addressing of configs.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Derives a child seed from a global seed and a component label, so every
/// stochastic component gets its own stream while remaining a pure function
/// of the global seed.
pub fn derive_seed(global: u64, label: &str) -> u64 {
    let mut bytes = Vec::with_capacity(8 + label.len());
    bytes.extend_from_slice(&global.to_le_bytes());
    bytes.extend_from_slice(label.as_bytes());
    fnv1a64(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_interpolates_linearly() {
        let v: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        assert!((percentile(&v, 90.0) - 9.1).abs() < 1e-12);
        assert!((percentile(&v, 10.0) - 1.9).abs() < 1e-12);
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 100.0), 10.0);
    }

    #[test]
    fn percentile_single_value() {
        assert_eq!(percentile(&[3.5], 40.0), 3.5);
    }

    #[test]
    fn sample_std_two_points() {
        // {1, 3}: mean 2, sum of squares 2, divisor 1.
        assert!((sample_std(&[1.0, 3.0]) - 2.0_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn derive_seed_differs_by_label() {
        assert_ne!(derive_seed(7, "train"), derive_seed(7, "anchors"));
        assert_eq!(derive_seed(7, "train"), derive_seed(7, "train"));
    }
}
