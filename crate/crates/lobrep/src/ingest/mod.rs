//! Data ingestion: FI-2010-style matrices, a generic snapshot CSV format,
//! deterministic synthetic fixtures, and dataset assembly with train-only
//! normalization statistics.

mod csv;
mod fi2010;
mod fixtures;
mod normalize;

pub use csv::{parse_snapshot_csv, parse_snapshot_csv_str, write_snapshot_csv, write_snapshot_csv_string};
pub use fi2010::{load_fi2010, load_fi2010_labels, parse_fi2010, Fi2010Config, Fi2010Data};
pub use fixtures::{
    deep_signal_series, random_series, random_snapshot, synth_fixture, DeepSignalConfig, Fixture,
};
pub use normalize::{apply_normalization, fit_normalization, invert_normalization, NormalizationStats};

use crate::book::{mid_series, stack_window, LobSnapshot, SnapshotWindow};
use crate::error::{Error, Result};
use crate::label::{label_series, ClassLabel, LabelConfig};

/// Where window labels come from.
#[derive(Debug, Clone, Copy)]
pub enum LabelSource<'a> {
    /// One precomputed label per time index (FI-2010 style).
    Provided(&'a [ClassLabel]),
    /// Compute micro-movement labels from the series' own mid-prices.
    Computed(LabelConfig),
}

/// Windows paired with three-class labels. Windows hold raw, unnormalized
/// features; normalization statistics are fit on training data only and
/// applied at the model boundary.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub windows: Vec<SnapshotWindow>,
    /// Label of each window, aligned to the window's end time.
    pub labels: Vec<ClassLabel>,
    /// End time index of each window in the source series.
    pub ends: Vec<usize>,
    pub stats: Option<NormalizationStats>,
    pub horizon: usize,
    pub depth: usize,
    pub history: usize,
}

impl LabeledDataset {
    pub fn new(
        windows: Vec<SnapshotWindow>,
        labels: Vec<ClassLabel>,
        ends: Vec<usize>,
        horizon: usize,
        depth: usize,
        history: usize,
    ) -> Result<Self> {
        if windows.len() != labels.len() || windows.len() != ends.len() {
            return Err(Error::DimensionMismatch {
                expected: windows.len(),
                got: labels.len(),
            });
        }
        Ok(LabeledDataset {
            windows,
            labels,
            ends,
            stats: None,
            horizon,
            depth,
            history,
        })
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    /// Count of labels per class, in Up/Stationary/Down order.
    pub fn class_distribution(&self) -> [usize; 3] {
        let mut counts = [0usize; 3];
        for label in &self.labels {
            counts[label.index()] += 1;
        }
        counts
    }

    /// Keep every `step`-th window. `step = 1` is a no-op.
    pub fn subsample(&self, step: usize) -> Result<LabeledDataset> {
        if step == 0 {
            return Err(Error::Config("subsample step must be at least 1".into()));
        }
        let pick = |n: usize| n.is_multiple_of(step);
        let mut out = self.clone();
        out.windows = self
            .windows
            .iter()
            .enumerate()
            .filter(|(i, _)| pick(*i))
            .map(|(_, w)| w.clone())
            .collect();
        out.labels = self
            .labels
            .iter()
            .enumerate()
            .filter(|(i, _)| pick(*i))
            .map(|(_, l)| *l)
            .collect();
        out.ends = self
            .ends
            .iter()
            .enumerate()
            .filter(|(i, _)| pick(*i))
            .map(|(_, e)| *e)
            .collect();
        Ok(out)
    }
}

/// Build a labeled dataset by stacking windows over a snapshot series.
///
/// With provided labels every window end has one; with computed labels the
/// trailing window ends without k future mids are dropped.
pub fn build_dataset(
    series: &[LobSnapshot],
    labels: LabelSource<'_>,
    history: usize,
) -> Result<LabeledDataset> {
    if series.is_empty() {
        return Err(Error::EmptyInput("snapshot series is empty".into()));
    }
    let depth = series[0].depth;
    let (per_time, horizon): (Vec<Option<ClassLabel>>, usize) = match labels {
        LabelSource::Provided(provided) => {
            if provided.len() != series.len() {
                return Err(Error::DimensionMismatch {
                    expected: series.len(),
                    got: provided.len(),
                });
            }
            (provided.iter().map(|&l| Some(l)).collect(), 0)
        }
        LabelSource::Computed(config) => {
            let mids = mid_series(series)?;
            let computed = label_series(&mids, &config)?;
            let mut per_time = vec![None; series.len()];
            for (t, label) in computed {
                per_time[t] = Some(label);
            }
            (per_time, config.horizon)
        }
    };

    let mut windows = Vec::new();
    let mut window_labels = Vec::new();
    let mut ends = Vec::new();
    for (end, label) in per_time.iter().enumerate().skip(history.saturating_sub(1)) {
        if let Some(label) = label {
            windows.push(stack_window(series, end, history)?);
            window_labels.push(*label);
            ends.push(end);
        }
    }
    if windows.is_empty() {
        return Err(Error::EmptyInput(
            "no labeled windows: series too short for the chosen history and horizon".into(),
        ));
    }
    LabeledDataset::new(windows, window_labels, ends, horizon, depth, history)
}

/// Rebuild the windows of an existing dataset over a (possibly perturbed)
/// version of the same series, keeping end indices and labels fixed.
pub fn rewindow(dataset: &LabeledDataset, series: &[LobSnapshot]) -> Result<LabeledDataset> {
    let mut windows = Vec::with_capacity(dataset.len());
    for &end in &dataset.ends {
        windows.push(stack_window(series, end, dataset.history)?);
    }
    let mut out = dataset.clone();
    out.windows = windows;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::LabelConfig;

    #[test]
    fn computed_labels_drop_tail_windows() {
        let series = synth_fixture(Fixture::ConstantBook(60));
        let config = LabelConfig::new(50, 0.002).unwrap();
        let dataset = build_dataset(&series, LabelSource::Computed(config), 5).unwrap();
        // Labels exist for t = 0..8; windows need t >= 4.
        assert_eq!(dataset.ends, vec![4, 5, 6, 7, 8]);
        assert!(dataset.labels.iter().all(|&l| l == ClassLabel::Stationary));
    }

    #[test]
    fn provided_labels_cover_every_column() {
        let series = synth_fixture(Fixture::ConstantBook(20));
        let provided = vec![ClassLabel::Up; 20];
        let dataset = build_dataset(&series, LabelSource::Provided(&provided), 10).unwrap();
        assert_eq!(dataset.len(), 11);
        assert_eq!(dataset.ends.first(), Some(&9));
        assert_eq!(dataset.ends.last(), Some(&19));
    }

    #[test]
    fn subsample_keeps_every_nth_window() {
        let series = synth_fixture(Fixture::ConstantBook(20));
        let provided = vec![ClassLabel::Up; 20];
        let dataset = build_dataset(&series, LabelSource::Provided(&provided), 10).unwrap();
        let thinned = dataset.subsample(3).unwrap();
        assert_eq!(thinned.ends, vec![9, 12, 15, 18]);
        assert_eq!(thinned.len(), 4);
    }
}
