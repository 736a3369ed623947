//! Per-feature z-score normalization, fit on training windows only.

use crate::book::SnapshotWindow;
use crate::error::{Error, Result};

/// Per-feature mean and standard deviation over all rows of the training
/// windows. Constant features get unit deviation and are flagged.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub constant: Vec<bool>,
}

impl NormalizationStats {
    pub fn feature_dim(&self) -> usize {
        self.mean.len()
    }

    /// Identity statistics: mean 0, deviation 1.
    pub fn identity(feature_dim: usize) -> Self {
        NormalizationStats {
            mean: vec![0.0; feature_dim],
            std: vec![1.0; feature_dim],
            constant: vec![false; feature_dim],
        }
    }
}

/// Fit population statistics over every row of every training window.
pub fn fit_normalization(windows: &[SnapshotWindow]) -> Result<NormalizationStats> {
    let first = windows
        .first()
        .ok_or_else(|| Error::EmptyInput("cannot fit statistics on an empty training set".into()))?;
    let dim = first.feature_dim();

    let mut count = 0usize;
    let mut sum = vec![0.0f64; dim];
    let mut min = vec![f64::INFINITY; dim];
    let mut max = vec![f64::NEG_INFINITY; dim];
    for window in windows {
        if window.feature_dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: window.feature_dim(),
            });
        }
        for row in window.rows() {
            count += 1;
            for (j, &v) in row.iter().enumerate() {
                sum[j] += v;
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / count as f64).collect();

    let mut sq_dev = vec![0.0f64; dim];
    for window in windows {
        for row in window.rows() {
            for (j, &v) in row.iter().enumerate() {
                let d = v - mean[j];
                sq_dev[j] += d * d;
            }
        }
    }
    let mut std = Vec::with_capacity(dim);
    let mut constant = Vec::with_capacity(dim);
    for j in 0..dim {
        // min == max is the exact constancy test; the variance of a
        // constant feature may round away from zero.
        if min[j] == max[j] {
            std.push(1.0);
            constant.push(true);
        } else {
            std.push((sq_dev[j] / count as f64).sqrt());
            constant.push(false);
        }
    }
    Ok(NormalizationStats { mean, std, constant })
}

/// Z-score a window with the given (training) statistics.
pub fn apply_normalization(
    window: &SnapshotWindow,
    stats: &NormalizationStats,
) -> Result<SnapshotWindow> {
    transform(window, stats, |v, mean, std| (v - mean) / std)
}

/// Undo [`apply_normalization`]; exact up to floating rounding.
pub fn invert_normalization(
    window: &SnapshotWindow,
    stats: &NormalizationStats,
) -> Result<SnapshotWindow> {
    transform(window, stats, |v, mean, std| v * std + mean)
}

fn transform(
    window: &SnapshotWindow,
    stats: &NormalizationStats,
    f: impl Fn(f64, f64, f64) -> f64,
) -> Result<SnapshotWindow> {
    if window.feature_dim() != stats.feature_dim() {
        return Err(Error::DimensionMismatch {
            expected: stats.feature_dim(),
            got: window.feature_dim(),
        });
    }
    let rows = window
        .rows()
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(j, &v)| f(v, stats.mean[j], stats.std[j]))
                .collect()
        })
        .collect();
    SnapshotWindow::from_rows(rows, window.depth())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window_of(rows: Vec<Vec<f64>>) -> SnapshotWindow {
        let depth = rows[0].len() / 4;
        SnapshotWindow::from_rows(rows, depth).unwrap()
    }

    #[test]
    fn constant_features_get_unit_deviation() {
        let w = window_of(vec![vec![5.0, 2.0, 4.0, 1.0]; 3]);
        let stats = fit_normalization(&[w.clone(), w.clone()]).unwrap();
        assert!(stats.constant.iter().all(|&c| c));
        assert!(stats.std.iter().all(|&s| s == 1.0));
        assert_eq!(stats.mean, vec![5.0, 2.0, 4.0, 1.0]);

        let normalized = apply_normalization(&w, &stats).unwrap();
        assert!(normalized.rows()[0].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn population_deviation_over_two_values() {
        // Feature values {0, 2}: mean 1, population deviation 1.
        let a = window_of(vec![vec![0.0, 0.0, 0.0, 0.0]]);
        let b = window_of(vec![vec![2.0, 2.0, 2.0, 2.0]]);
        let stats = fit_normalization(&[a, b]).unwrap();
        assert_eq!(stats.mean, vec![1.0; 4]);
        assert_eq!(stats.std, vec![1.0; 4]);
        assert!(stats.constant.iter().all(|&c| !c));
    }

    #[test]
    fn apply_then_invert_is_identity() {
        let w = window_of(vec![
            vec![10.02, 3.0, 9.98, 4.0],
            vec![10.03, 5.0, 9.97, 2.0],
            vec![10.01, 7.0, 9.99, 9.0],
        ]);
        let stats = fit_normalization(std::slice::from_ref(&w)).unwrap();
        let normalized = apply_normalization(&w, &stats).unwrap();
        let restored = invert_normalization(&normalized, &stats).unwrap();
        for (orig, back) in w.rows().iter().zip(restored.rows()) {
            for (a, b) in orig.iter().zip(back) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unit_stats_are_identity() {
        let w = window_of(vec![vec![1.5, -2.0, 0.25, 8.0]]);
        let stats = NormalizationStats::identity(4);
        assert_eq!(apply_normalization(&w, &stats).unwrap(), w);
    }

    #[test]
    fn empty_training_set_is_an_error() {
        assert!(matches!(
            fit_normalization(&[]),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let w = window_of(vec![vec![1.0, 2.0, 3.0, 4.0]]);
        let stats = NormalizationStats::identity(8);
        assert!(matches!(
            apply_normalization(&w, &stats),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
