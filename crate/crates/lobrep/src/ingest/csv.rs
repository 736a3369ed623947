//! Generic snapshot CSV format.
//!
//! One record per line, comma-delimited: time index, then 4L fields in the
//! canonical interleaving `(ask price, ask volume, bid price, bid volume)`
//! per level, best level first. Prices are decimal and must sit exactly on
//! the tick grid; volumes are whole counts. Synthetic-level flags are not
//! carried by the format.

use std::path::Path;

use crate::book::{parse_scaled_decimal, LobSnapshot, PriceLevel, TickGrid};
use crate::error::{Error, Result};

/// Parse a snapshot series. An empty file is an empty series, not an error.
pub fn parse_snapshot_csv(path: impl AsRef<Path>, depth: usize, grid: TickGrid) -> Result<Vec<LobSnapshot>> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    parse_snapshot_csv_str(&std::fs::read_to_string(path)?, depth, grid)
}

pub fn parse_snapshot_csv_str(text: &str, depth: usize, grid: TickGrid) -> Result<Vec<LobSnapshot>> {
    let mut series = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line_no = line_no + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let expected = 1 + 4 * depth;
        if fields.len() != expected {
            return Err(Error::Parse {
                line: line_no,
                field: fields.len(),
                message: format!("expected {expected} fields, found {}", fields.len()),
            });
        }
        let time_index: u64 = fields[0].parse().map_err(|_| Error::Parse {
            line: line_no,
            field: 1,
            message: format!("time index '{}' is not a non-negative integer", fields[0]),
        })?;

        let mut asks = Vec::with_capacity(depth);
        let mut bids = Vec::with_capacity(depth);
        for level in 0..depth {
            for (offset, side_levels) in [(0usize, &mut asks), (2usize, &mut bids)] {
                let price_field = 1 + 4 * level + offset;
                let price_token = fields[price_field];
                let price = grid.parse_price(price_token).map_err(|_| Error::OffGridPrice {
                    value: price_token.to_string(),
                    tick_size: format!("{}", grid.tick_size()),
                    line: Some(line_no),
                })?;
                let volume_token = fields[price_field + 1];
                let volume = parse_scaled_decimal(volume_token, 1)
                    .filter(|&v| v >= 1)
                    .ok_or(Error::OffGridVolume {
                        value: volume_token.to_string(),
                        line: Some(line_no),
                    })?;
                side_levels.push(PriceLevel::new(price, volume as u64));
            }
        }
        let snapshot = LobSnapshot::new(time_index, grid, depth, asks, bids)
            .map_err(|e| Error::Parse {
                line: line_no,
                field: 0,
                message: e.to_string(),
            })?;
        series.push(snapshot);
    }
    Ok(series)
}

/// Render a series in the canonical CSV layout. All snapshots must share
/// one grid and depth.
pub fn write_snapshot_csv_string(series: &[LobSnapshot]) -> Result<String> {
    let mut out = String::new();
    let Some(first) = series.first() else {
        return Ok(out);
    };
    for snapshot in series {
        if snapshot.grid != first.grid || snapshot.depth != first.depth {
            return Err(Error::InvalidSnapshot(
                "snapshot CSV requires a shared grid and depth".into(),
            ));
        }
        if !snapshot.is_complete() {
            return Err(Error::IncompleteSnapshot {
                side: if snapshot.asks.len() != snapshot.depth { "ask" } else { "bid" },
                got: snapshot.asks.len().min(snapshot.bids.len()),
                expected: snapshot.depth,
            });
        }
        let mut fields = Vec::with_capacity(1 + 4 * snapshot.depth);
        fields.push(snapshot.time_index.to_string());
        for level in 0..snapshot.depth {
            for side in [&snapshot.asks, &snapshot.bids] {
                fields.push(snapshot.grid.format_price(side[level].price));
                fields.push(side[level].volume.to_string());
            }
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    Ok(out)
}

pub fn write_snapshot_csv(path: impl AsRef<Path>, series: &[LobSnapshot]) -> Result<()> {
    std::fs::write(path, write_snapshot_csv_string(series)?)?;
    Ok(())
}
