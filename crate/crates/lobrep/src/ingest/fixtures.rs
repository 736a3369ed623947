//! Deterministic synthetic fixtures: a canonical gapped book, constant
//! and ramping series, seeded random books, and a deep-signal series whose
//! predictive information lives in deep-level volumes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::book::{LobSnapshot, PriceLevel, TickGrid};
use crate::error::{Error, Result};
use crate::label::{classify, micro_movement, ClassLabel};

/// Named synthetic fixtures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fixture {
    /// Single 10-level book on a 0.01 grid with mid 10.00, spread 0.04 and
    /// empty ticks at 10.03/10.06 (asks) and 9.96/9.94 (bids), among others.
    Fig2Like,
    /// The Fig2Like book repeated N times.
    ConstantBook(usize),
    /// The Fig2Like book with all prices shifted up one tick per step.
    RampBook(usize),
}

impl Fixture {
    pub fn from_name(name: &str, len: usize) -> Result<Self> {
        match name.to_ascii_lowercase().replace('-', "_").as_str() {
            "fig2like" | "fig2_like" => Ok(Fixture::Fig2Like),
            "constant_book" => Ok(Fixture::ConstantBook(len)),
            "ramp_book" => Ok(Fixture::RampBook(len)),
            other => Err(Error::UnknownFixture(other.to_string())),
        }
    }
}

fn fig2_snapshot(time_index: u64, shift: i64) -> LobSnapshot {
    let grid = TickGrid::from_price_scale(100).expect("fixture grid");
    let asks = [
        (1002, 3),
        (1004, 5),
        (1005, 2),
        (1007, 4),
        (1012, 6),
        (1013, 1),
        (1014, 7),
        (1015, 2),
        (1016, 5),
        (1017, 3),
    ];
    let bids = [
        (998, 4),
        (997, 2),
        (995, 6),
        (993, 3),
        (988, 5),
        (987, 2),
        (986, 4),
        (985, 1),
        (984, 6),
        (983, 2),
    ];
    LobSnapshot::new(
        time_index,
        grid,
        10,
        asks.iter().map(|&(p, v)| PriceLevel::new(p + shift, v)).collect(),
        bids.iter().map(|&(p, v)| PriceLevel::new(p + shift, v)).collect(),
    )
    .expect("fixture book satisfies all invariants")
}

/// Build the named fixture series.
pub fn synth_fixture(fixture: Fixture) -> Vec<LobSnapshot> {
    match fixture {
        Fixture::Fig2Like => vec![fig2_snapshot(0, 0)],
        Fixture::ConstantBook(n) => (0..n).map(|i| fig2_snapshot(i as u64, 0)).collect(),
        Fixture::RampBook(n) => (0..n).map(|i| fig2_snapshot(i as u64, i as i64)).collect(),
    }
}

/// One random valid snapshot: random spread, random per-level gaps and
/// volumes. Deterministic given the generator state.
pub fn random_snapshot(
    rng: &mut impl Rng,
    grid: TickGrid,
    depth: usize,
    time_index: u64,
) -> LobSnapshot {
    let best_bid: i64 = rng.gen_range(1_000..5_000_000);
    let spread: i64 = rng.gen_range(1..=5);
    let mut asks = Vec::with_capacity(depth);
    let mut bids = Vec::with_capacity(depth);
    let mut ask_price = best_bid + spread;
    let mut bid_price = best_bid;
    for level in 0..depth {
        asks.push(PriceLevel::new(ask_price, rng.gen_range(1..=999)));
        bids.push(PriceLevel::new(bid_price, rng.gen_range(1..=999)));
        if level + 1 < depth {
            ask_price += rng.gen_range(1..=4);
            bid_price -= rng.gen_range(1..=4);
        }
    }
    LobSnapshot::new(time_index, grid, depth, asks, bids)
        .expect("randomly generated ladder satisfies all invariants")
}

/// A seeded series of independent random books sharing one grid and depth.
pub fn random_series(seed: u64, len: usize, grid: TickGrid, depth: usize) -> Vec<LobSnapshot> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|i| random_snapshot(&mut rng, grid, depth, i as u64))
        .collect()
}

/// Configuration of the deep-signal synthetic series.
///
/// The mid-price follows a seeded one-tick random walk, and the volumes of
/// levels 5..depth encode the realized future movement class of each step.
/// Levels 1..4 carry uninformative noise. Consecutive levels sit three
/// ticks apart, so filling the two empty ticks between them pushes every
/// signal-carrying level out of the visible window.
#[derive(Debug, Clone, Copy)]
pub struct DeepSignalConfig {
    pub len: usize,
    pub seed: u64,
    /// Label horizon used to derive the planted classes.
    pub horizon: usize,
    pub alpha: f64,
    pub depth: usize,
}

impl Default for DeepSignalConfig {
    fn default() -> Self {
        DeepSignalConfig {
            len: 4_000,
            seed: 7,
            horizon: 10,
            alpha: 0.002,
            depth: 10,
        }
    }
}

/// Generate the deep-signal series. Labels computed from the returned
/// series' mid-prices match the classes planted in the deep volumes.
pub fn deep_signal_series(config: &DeepSignalConfig) -> Result<Vec<LobSnapshot>> {
    if config.depth < 6 {
        return Err(Error::Config(
            "deep-signal series needs depth of at least 6".into(),
        ));
    }
    if config.len <= config.horizon + 1 {
        return Err(Error::Config(format!(
            "deep-signal series of length {} is too short for horizon {}",
            config.len, config.horizon
        )));
    }
    let grid = TickGrid::from_price_scale(100)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    // One-tick random walk around 10.00, floored well above zero.
    let mut mid_ticks = Vec::with_capacity(config.len);
    let mut mid: i64 = 1_000;
    for _ in 0..config.len {
        mid_ticks.push(mid);
        let step = if rng.gen_bool(0.5) { 1 } else { -1 };
        mid = (mid + step).max(300);
    }
    let mids: Vec<f64> = mid_ticks.iter().map(|&m| grid.ticks_to_price(m)).collect();

    // Realized movement class per step; the tail without enough future
    // data stays uninformative.
    let mut classes = vec![ClassLabel::Stationary; config.len];
    for (t, class) in classes.iter_mut().enumerate() {
        if t + config.horizon < config.len {
            let movement = micro_movement(&mids, t, config.horizon)?;
            *class = classify(movement, config.alpha)?;
        }
    }

    let mut series = Vec::with_capacity(config.len);
    for (t, (&mid, &class)) in mid_ticks.iter().zip(&classes).enumerate() {
        let signal_base = match class {
            ClassLabel::Up => 25,
            ClassLabel::Stationary => 55,
            ClassLabel::Down => 85,
        };
        let mut asks = Vec::with_capacity(config.depth);
        let mut bids = Vec::with_capacity(config.depth);
        for level in 0..config.depth {
            let volume = if level < 4 {
                rng.gen_range(20..=80)
            } else {
                signal_base + rng.gen_range(0..=10)
            };
            let offset = 3 * level as i64;
            asks.push(PriceLevel::new(mid + 1 + offset, volume));
            bids.push(PriceLevel::new(mid - 1 - offset, volume));
        }
        series.push(LobSnapshot::new(t as u64, grid, config.depth, asks, bids)?);
    }
    Ok(series)
}
