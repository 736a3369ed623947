//! FI-2010-style matrix ingestion.
//!
//! The input is a dense numeric text matrix, rows = features and columns =
//! time points, whitespace- or comma-delimited. The first 40 rows hold the
//! 10-level interleaved book `(p_a, v_a, p_b, v_b)` per level; the final 5
//! rows hold one label row per prediction horizon. Anything in between is
//! ignored.

use std::path::Path;

use crate::book::{parse_scaled_decimal, LobSnapshot, PriceLevel, TickGrid};
use crate::error::{Error, Result};
use crate::ingest::{build_dataset, LabelSource, LabeledDataset};
use crate::label::ClassLabel;

const BOOK_ROWS: usize = 40;
const LABEL_ROWS: usize = 5;
const BOOK_DEPTH: usize = 10;

/// Parser configuration. The decimal-precision FI-2010 variant is the
/// supported feature input; its price and volume units are file-specific,
/// so both scales are explicit here.
#[derive(Debug, Clone)]
pub struct Fi2010Config {
    /// Ticks per file price unit.
    pub price_scale: u32,
    /// Volume units per file volume unit.
    pub volume_scale: u32,
    /// Prediction horizons of the last five rows, in row order.
    pub label_rows: Vec<usize>,
    /// Truncate each row to this many columns while reading.
    pub max_columns: Option<usize>,
}

impl Default for Fi2010Config {
    fn default() -> Self {
        Fi2010Config {
            price_scale: 10_000,
            volume_scale: 10_000,
            label_rows: vec![10, 20, 30, 50, 100],
            max_columns: None,
        }
    }
}

impl Fi2010Config {
    fn horizon_row(&self, horizon: usize) -> Result<usize> {
        self.label_rows
            .iter()
            .position(|&k| k == horizon)
            .ok_or(Error::UnknownHorizon(horizon))
    }
}

/// A parsed matrix: one snapshot per column plus every label row.
#[derive(Debug, Clone)]
pub struct Fi2010Data {
    pub snapshots: Vec<LobSnapshot>,
    /// Labels per horizon row, each one label per column.
    pub labels: Vec<Vec<ClassLabel>>,
    /// Horizon of each label row, in row order.
    pub label_rows: Vec<usize>,
}

impl Fi2010Data {
    pub fn labels_for_horizon(&self, horizon: usize) -> Result<&[ClassLabel]> {
        let row = self
            .label_rows
            .iter()
            .position(|&k| k == horizon)
            .ok_or(Error::UnknownHorizon(horizon))?;
        Ok(&self.labels[row])
    }
}

fn tokenize(line: &str, max_columns: Option<usize>) -> Vec<&str> {
    let iter: Box<dyn Iterator<Item = &str>> = if line.contains(',') {
        Box::new(line.split(',').map(str::trim))
    } else {
        Box::new(line.split_whitespace())
    };
    let iter = iter.filter(|t| !t.is_empty());
    match max_columns {
        Some(cap) => iter.take(cap).collect(),
        None => iter.collect(),
    }
}

fn read_rows(path: &Path, config: &Fi2010Config) -> Result<Vec<Vec<String>>> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path)?;
    let mut rows: Vec<Vec<String>> = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        rows.push(
            tokenize(line, config.max_columns)
                .into_iter()
                .map(str::to_string)
                .collect(),
        );
    }
    if rows.len() < BOOK_ROWS + LABEL_ROWS {
        return Err(Error::MalformedMatrix(format!(
            "expected at least {} rows, found {}",
            BOOK_ROWS + LABEL_ROWS,
            rows.len()
        )));
    }
    let columns = rows[0].len();
    if columns == 0 {
        return Err(Error::MalformedMatrix("matrix has no columns".into()));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != columns {
            return Err(Error::MalformedMatrix(format!(
                "row {} has {} columns, expected {}",
                i + 1,
                row.len(),
                columns
            )));
        }
    }
    Ok(rows)
}

fn parse_label_rows(rows: &[Vec<String>]) -> Result<Vec<Vec<ClassLabel>>> {
    let first_label_row = rows.len() - LABEL_ROWS;
    let mut labels = Vec::with_capacity(LABEL_ROWS);
    for (offset, row) in rows[first_label_row..].iter().enumerate() {
        let mut parsed = Vec::with_capacity(row.len());
        for (col, token) in row.iter().enumerate() {
            let value: f64 = token.parse().map_err(|_| Error::Parse {
                line: first_label_row + offset + 1,
                field: col + 1,
                message: format!("non-numeric label '{token}'"),
            })?;
            let code = value.round();
            if (value - code).abs() > 1e-9 || !(1.0..=3.0).contains(&code) {
                return Err(Error::Parse {
                    line: first_label_row + offset + 1,
                    field: col + 1,
                    message: format!("label '{token}' is not in {{1, 2, 3}}"),
                });
            }
            parsed.push(ClassLabel::from_code(code as u8)?);
        }
        labels.push(parsed);
    }
    Ok(labels)
}

/// Parse the full matrix into snapshots and label rows.
pub fn load_fi2010(path: impl AsRef<Path>, config: &Fi2010Config) -> Result<Fi2010Data> {
    let path = path.as_ref();
    let rows = read_rows(path, config)?;
    let columns = rows[0].len();
    let grid = TickGrid::from_price_scale(config.price_scale)?;

    let mut snapshots = Vec::with_capacity(columns);
    #[allow(clippy::needless_range_loop)]
    for col in 0..columns {
        let mut asks = Vec::with_capacity(BOOK_DEPTH);
        let mut bids = Vec::with_capacity(BOOK_DEPTH);
        for level in 0..BOOK_DEPTH {
            for (offset, side_levels) in [(0usize, &mut asks), (2usize, &mut bids)] {
                let price_row = 4 * level + offset;
                let volume_row = price_row + 1;
                let price_token = &rows[price_row][col];
                let price = grid.parse_price(price_token).map_err(|_| Error::OffGridPrice {
                    value: price_token.clone(),
                    tick_size: format!("{}", grid.tick_size()),
                    line: Some(price_row + 1),
                })?;
                let volume_token = &rows[volume_row][col];
                let units = parse_scaled_decimal(volume_token, config.volume_scale).ok_or(
                    Error::OffGridVolume {
                        value: volume_token.clone(),
                        line: Some(volume_row + 1),
                    },
                )?;
                if units < 1 {
                    return Err(Error::Parse {
                        line: volume_row + 1,
                        field: col + 1,
                        message: format!("volume '{volume_token}' is not positive"),
                    });
                }
                side_levels.push(PriceLevel::new(price, units as u64));
            }
        }
        let snapshot =
            LobSnapshot::new(col as u64, grid, BOOK_DEPTH, asks, bids).map_err(|e| {
                Error::MalformedMatrix(format!("column {}: {e}", col + 1))
            })?;
        snapshots.push(snapshot);
    }

    let labels = parse_label_rows(&rows)?;
    Ok(Fi2010Data {
        snapshots,
        labels,
        label_rows: config.label_rows.clone(),
    })
}

/// Extract only the label rows. Works on z-scored matrix variants whose
/// feature rows do not sit on any price grid.
pub fn load_fi2010_labels(
    path: impl AsRef<Path>,
    config: &Fi2010Config,
) -> Result<Vec<Vec<ClassLabel>>> {
    let rows = read_rows(path.as_ref(), config)?;
    parse_label_rows(&rows)
}

/// Parse a matrix and build windows labeled at their end column for the
/// selected horizon.
pub fn parse_fi2010(
    path: impl AsRef<Path>,
    horizon: usize,
    history: usize,
) -> Result<LabeledDataset> {
    parse_fi2010_with(path, horizon, history, &Fi2010Config::default())
}

pub fn parse_fi2010_with(
    path: impl AsRef<Path>,
    horizon: usize,
    history: usize,
    config: &Fi2010Config,
) -> Result<LabeledDataset> {
    config.horizon_row(horizon)?;
    let data = load_fi2010(path, config)?;
    let labels = data.labels_for_horizon(horizon)?;
    let mut dataset = build_dataset(&data.snapshots, LabelSource::Provided(labels), history)?;
    dataset.horizon = horizon;
    Ok(dataset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{synth_fixture, Fixture};

    /// Render a series as matrix text with the given per-horizon labels.
    fn matrix_text(series: &[LobSnapshot], labels: &[Vec<u8>], volume_scale: u32) -> String {
        let grid = series[0].grid;
        let mut lines = Vec::new();
        for level in 0..series[0].depth {
            for source in 0..4usize {
                let row: Vec<String> = series
                    .iter()
                    .map(|s| {
                        let (side, offset) = if source < 2 {
                            (&s.asks, source)
                        } else {
                            (&s.bids, source - 2)
                        };
                        let l = &side[level];
                        if offset == 0 {
                            grid.format_price(l.price)
                        } else {
                            format!("{}", l.volume as f64 / volume_scale as f64)
                        }
                    })
                    .collect();
                lines.push(row.join(" "));
            }
        }
        for row in labels {
            lines.push(
                row.iter()
                    .map(|c| c.to_string())
                    .collect::<Vec<_>>()
                    .join(" "),
            );
        }
        lines.join("\n")
    }

    fn write_matrix(text: &str) -> tempfile::NamedTempFile {
        use std::io::Write;
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(text.as_bytes()).unwrap();
        file
    }

    fn test_config() -> Fi2010Config {
        Fi2010Config {
            price_scale: 100,
            volume_scale: 1,
            ..Fi2010Config::default()
        }
    }

    #[test]
    fn window_count_matches_columns() {
        let series = synth_fixture(Fixture::ConstantBook(100));
        let labels: Vec<Vec<u8>> = (0..5).map(|_| vec![2u8; 100]).collect();
        let file = write_matrix(&matrix_text(&series, &labels, 1));
        let dataset = parse_fi2010_with(file.path(), 50, 10, &test_config()).unwrap();
        assert_eq!(dataset.len(), 91);
        assert!(dataset
            .labels
            .iter()
            .all(|&l| l == ClassLabel::Stationary));
    }

    #[test]
    fn horizon_selects_matching_label_row() {
        let series = synth_fixture(Fixture::ConstantBook(20));
        // Row for k=50 is all Up, the others all Down.
        let labels: Vec<Vec<u8>> = (0..5)
            .map(|row| vec![if row == 3 { 1u8 } else { 3u8 }; 20])
            .collect();
        let file = write_matrix(&matrix_text(&series, &labels, 1));
        let dataset = parse_fi2010_with(file.path(), 50, 5, &test_config()).unwrap();
        assert!(dataset.labels.iter().all(|&l| l == ClassLabel::Up));

        let dataset = parse_fi2010_with(file.path(), 10, 5, &test_config()).unwrap();
        assert!(dataset.labels.iter().all(|&l| l == ClassLabel::Down));

        assert!(matches!(
            parse_fi2010_with(file.path(), 40, 5, &test_config()),
            Err(Error::UnknownHorizon(40))
        ));
    }

    #[test]
    fn snapshots_round_trip_through_matrix() {
        let series = synth_fixture(Fixture::RampBook(12));
        let labels: Vec<Vec<u8>> = (0..5).map(|_| vec![2u8; 12]).collect();
        let file = write_matrix(&matrix_text(&series, &labels, 1));
        let data = load_fi2010(file.path(), &test_config()).unwrap();
        assert_eq!(data.snapshots, series);
    }

    #[test]
    fn volume_scale_converts_decimal_volumes() {
        let series = synth_fixture(Fixture::ConstantBook(6));
        let labels: Vec<Vec<u8>> = (0..5).map(|_| vec![1u8; 6]).collect();
        // Volumes rendered as fractions of 10^4 units.
        let text = matrix_text(&series, &labels, 10_000);
        let file = write_matrix(&text);
        let config = Fi2010Config {
            price_scale: 100,
            volume_scale: 10_000,
            ..Fi2010Config::default()
        };
        let data = load_fi2010(file.path(), &config).unwrap();
        assert_eq!(data.snapshots[0].asks, series[0].asks);
    }

    #[test]
    fn malformed_matrices_are_reported() {
        let file = write_matrix("1 2 3\n4 5 6");
        assert!(matches!(
            load_fi2010(file.path(), &test_config()),
            Err(Error::MalformedMatrix(_))
        ));

        let series = synth_fixture(Fixture::ConstantBook(4));
        let labels: Vec<Vec<u8>> = (0..5).map(|_| vec![2u8; 4]).collect();
        let mut text = matrix_text(&series, &labels, 1);
        text.push_str("\n1 2");
        let file = write_matrix(&text);
        assert!(matches!(
            load_fi2010(file.path(), &test_config()),
            Err(Error::MalformedMatrix(_))
        ));
    }

    #[test]
    fn non_numeric_cells_carry_location() {
        let series = synth_fixture(Fixture::ConstantBook(4));
        let labels: Vec<Vec<u8>> = (0..5).map(|_| vec![2u8; 4]).collect();
        let text = matrix_text(&series, &labels, 1).replace("10.02", "oops");
        let file = write_matrix(&text);
        let err = load_fi2010(file.path(), &test_config()).unwrap_err();
        assert!(matches!(err, Error::OffGridPrice { line: Some(1), .. }));
    }

    #[test]
    fn label_entries_outside_codes_are_rejected() {
        let series = synth_fixture(Fixture::ConstantBook(4));
        let labels: Vec<Vec<u8>> = (0..5).map(|_| vec![4u8; 4]).collect();
        let file = write_matrix(&matrix_text(&series, &labels, 1));
        assert!(matches!(
            load_fi2010(file.path(), &test_config()),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn label_only_extraction_ignores_feature_rows() {
        let series = synth_fixture(Fixture::ConstantBook(4));
        let labels: Vec<Vec<u8>> = (0..5).map(|_| vec![3u8; 4]).collect();
        // Corrupt a feature cell; label extraction must still work.
        let text = matrix_text(&series, &labels, 1).replace("10.02", "0.123456789");
        let file = write_matrix(&text);
        let rows = load_fi2010_labels(file.path(), &test_config()).unwrap();
        assert_eq!(rows.len(), 5);
        assert!(rows[3].iter().all(|&l| l == ClassLabel::Down));
    }

    #[test]
    fn comma_delimited_matrices_parse_too() {
        let series = synth_fixture(Fixture::ConstantBook(6));
        let labels: Vec<Vec<u8>> = (0..5).map(|_| vec![2u8; 6]).collect();
        let text = matrix_text(&series, &labels, 1).replace(' ', ",");
        let file = write_matrix(&text);
        let data = load_fi2010(file.path(), &test_config()).unwrap();
        assert_eq!(data.snapshots.len(), 6);
    }

    #[test]
    fn max_columns_truncates() {
        let series = synth_fixture(Fixture::ConstantBook(50));
        let labels: Vec<Vec<u8>> = (0..5).map(|_| vec![2u8; 50]).collect();
        let file = write_matrix(&matrix_text(&series, &labels, 1));
        let config = Fi2010Config {
            max_columns: Some(20),
            ..test_config()
        };
        let data = load_fi2010(file.path(), &config).unwrap();
        assert_eq!(data.snapshots.len(), 20);
    }
}
