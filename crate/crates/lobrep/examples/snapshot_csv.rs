//! The generic snapshot CSV format: write a series, parse it back, and see
//! the parser reject off-grid prices with their location.
//!
//! Run with: cargo run --example snapshot_csv

use lobrep::book::TickGrid;
use lobrep::ingest::{parse_snapshot_csv_str, random_series, write_snapshot_csv_string};

fn main() -> lobrep::Result<()> {
    let grid = TickGrid::from_tick_size(0.01)?;
    let series = random_series(7, 3, grid, 2);

    let text = write_snapshot_csv_string(&series)?;
    println!("canonical layout: time index, then (ask price, ask volume, bid price, bid volume) per level:\n");
    print!("{text}");

    let parsed = parse_snapshot_csv_str(&text, 2, grid)?;
    assert_eq!(parsed, series);
    println!("\nround trip is exact for {} snapshots", parsed.len());

    // Prices must sit exactly on the tick grid.
    let off_grid = "0,10.021,3,9.98,4,10.05,2,9.95,1\n";
    match parse_snapshot_csv_str(off_grid, 2, grid) {
        Err(e) => println!("\noff-grid record rejected: {e}"),
        Ok(_) => unreachable!("10.021 is not on a 0.01 grid"),
    }

    // Crossed books are rejected at parse time too.
    let crossed = "0,9.90,3,9.98,4,10.05,2,9.95,1\n";
    match parse_snapshot_csv_str(crossed, 2, grid) {
        Err(e) => println!("crossed record rejected: {e}"),
        Ok(_) => unreachable!("bid above ask must not parse"),
    }
    Ok(())
}
