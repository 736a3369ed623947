//! Tick-grid order book snapshots and the level-based feature representation.
//!
//! Prices are held as integer tick counts; decimal prices appear only at I/O
//! boundaries. Mid-prices are represented exactly in half-ticks so that
//! invariance checks can use integer equality instead of float tolerances.

use crate::error::{Error, Result};

/// Integer price grid. `price_scale` is the number of ticks per currency
/// unit, i.e. the tick size is `1 / price_scale`.
///
/// The scale must be of the form `2^a * 5^b` so every tick count has an
/// exact terminating decimal representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TickGrid {
    price_scale: u32,
}

impl TickGrid {
    pub fn from_price_scale(price_scale: u32) -> Result<Self> {
        if price_scale == 0 {
            return Err(Error::InvalidGrid("price scale must be positive".into()));
        }
        let mut rest = price_scale;
        for p in [2u32, 5] {
            while rest.is_multiple_of(p) {
                rest /= p;
            }
        }
        if rest != 1 {
            return Err(Error::InvalidGrid(format!(
                "price scale {price_scale} does not describe a decimal tick size"
            )));
        }
        Ok(TickGrid { price_scale })
    }

    /// Build a grid from a decimal tick size such as 0.01. The tick size
    /// must be the reciprocal of an integer scale.
    pub fn from_tick_size(tick_size: f64) -> Result<Self> {
        if !tick_size.is_finite() || tick_size <= 0.0 {
            return Err(Error::InvalidGrid(format!(
                "tick size must be positive, got {tick_size}"
            )));
        }
        let scale = 1.0 / tick_size;
        let rounded = scale.round();
        if rounded < 1.0 || rounded > u32::MAX as f64 || (scale - rounded).abs() > 1e-6 * scale {
            return Err(Error::InvalidGrid(format!(
                "tick size {tick_size} is not the reciprocal of an integer scale"
            )));
        }
        TickGrid::from_price_scale(rounded as u32)
    }

    pub fn price_scale(&self) -> u32 {
        self.price_scale
    }

    pub fn tick_size(&self) -> f64 {
        1.0 / self.price_scale as f64
    }

    /// Number of decimal places needed to print any tick count exactly.
    pub fn decimal_places(&self) -> u32 {
        let mut d = 0;
        let mut pow: u64 = 1;
        while !pow.is_multiple_of(self.price_scale as u64) {
            pow *= 10;
            d += 1;
        }
        d
    }

    pub fn ticks_to_price(&self, ticks: i64) -> f64 {
        ticks as f64 / self.price_scale as f64
    }

    /// Convert a decimal price (already in f64) to a tick count. The value
    /// must sit on the grid up to a small tolerance that absorbs binary
    /// representation error of decimal literals.
    pub fn price_to_ticks(&self, price: f64) -> Result<i64> {
        if !price.is_finite() {
            return Err(Error::NonFinite(format!("price {price}")));
        }
        let scaled = price * self.price_scale as f64;
        let rounded = scaled.round();
        let tol = 1e-6 * scaled.abs().max(1.0);
        if (scaled - rounded).abs() > tol {
            return Err(Error::OffGridPrice {
                value: format!("{price}"),
                tick_size: format!("{}", self.tick_size()),
                line: None,
            });
        }
        Ok(rounded as i64)
    }

    /// Parse a decimal price string to ticks using exact integer arithmetic.
    /// Strings with an exponent fall back to float conversion.
    pub fn parse_price(&self, text: &str) -> Result<i64> {
        parse_scaled_decimal(text, self.price_scale).ok_or_else(|| Error::OffGridPrice {
            value: text.trim().to_string(),
            tick_size: format!("{}", self.tick_size()),
            line: None,
        })
    }

    /// Render a tick count as an exact decimal price string.
    pub fn format_price(&self, ticks: i64) -> String {
        let d = self.decimal_places();
        let pow = 10i128.pow(d);
        let multiplier = pow / self.price_scale as i128;
        let value = ticks as i128 * multiplier;
        let sign = if value < 0 { "-" } else { "" };
        let abs = value.abs();
        if d == 0 {
            format!("{sign}{abs}")
        } else {
            format!("{sign}{}.{:0width$}", abs / pow, abs % pow, width = d as usize)
        }
    }
}

/// Parse a decimal string as an exact multiple of `1/scale`. Returns None
/// for malformed numbers and values not exactly representable at the given
/// scale. Strings with an exponent fall back to float conversion with a
/// small tolerance.
pub(crate) fn parse_scaled_decimal(text: &str, scale: u32) -> Option<i64> {
    let trimmed = text.trim();
    if trimmed.contains(['e', 'E']) {
        let value: f64 = trimmed.parse().ok()?;
        if !value.is_finite() {
            return None;
        }
        let scaled = value * scale as f64;
        let rounded = scaled.round();
        if (scaled - rounded).abs() > 1e-6 * scaled.abs().max(1.0) {
            return None;
        }
        return Some(rounded as i64);
    }
    let (sign, digits) = match trimmed.strip_prefix('-') {
        Some(rest) => (-1i128, rest),
        None => (1i128, trimmed.strip_prefix('+').unwrap_or(trimmed)),
    };
    let (whole, frac) = match digits.split_once('.') {
        Some((w, f)) => (w, f),
        None => (digits, ""),
    };
    if (whole.is_empty() && frac.is_empty())
        || !whole.chars().all(|c| c.is_ascii_digit())
        || !frac.chars().all(|c| c.is_ascii_digit())
        || whole.len() + frac.len() > 30
    {
        return None;
    }
    let mut numerator: i128 = 0;
    for c in whole.chars().chain(frac.chars()) {
        numerator = numerator * 10 + (c as u8 - b'0') as i128;
    }
    let denominator = 10i128.pow(frac.len() as u32);
    let scaled = numerator * scale as i128;
    if scaled % denominator != 0 {
        return None;
    }
    i64::try_from(sign * scaled / denominator).ok()
}

/// Book side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Ask,
    Bid,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Ask => "ask",
            Side::Bid => "bid",
        }
    }
}

/// One occupied price level. Empty levels are absent, never zero-volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PriceLevel {
    /// Price in ticks.
    pub price: i64,
    /// Resting volume in order-size units; at least 1.
    pub volume: u64,
    /// Marks perturbation-injected levels. Diagnostics only: the emitted
    /// feature vector does not distinguish synthetic levels.
    pub synthetic: bool,
}

impl PriceLevel {
    pub fn new(price: i64, volume: u64) -> Self {
        PriceLevel {
            price,
            volume,
            synthetic: false,
        }
    }

    pub fn synthetic(price: i64, volume: u64) -> Self {
        PriceLevel {
            price,
            volume,
            synthetic: true,
        }
    }
}

/// A single violation found by [`LobSnapshot::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BookViolation {
    /// Best bid at or above best ask.
    Crossed { best_bid: i64, best_ask: i64 },
    /// Ask prices not strictly increasing / bid prices not strictly
    /// decreasing at `index`.
    NonMonotone { side: Side, index: usize },
    /// Occupied level with zero volume.
    ZeroVolume { side: Side, index: usize },
    /// Side has no levels at all.
    EmptySide { side: Side },
    /// Side does not hold exactly `depth` levels.
    Incomplete {
        side: Side,
        expected: usize,
        got: usize,
    },
}

impl std::fmt::Display for BookViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BookViolation::Crossed { best_bid, best_ask } => {
                write!(f, "crossed: best bid {best_bid} >= best ask {best_ask}")
            }
            BookViolation::NonMonotone { side, index } => {
                write!(f, "non-monotone {} prices at level {}", side.name(), index + 1)
            }
            BookViolation::ZeroVolume { side, index } => {
                write!(f, "zero volume on {} level {}", side.name(), index + 1)
            }
            BookViolation::EmptySide { side } => write!(f, "empty {} side", side.name()),
            BookViolation::Incomplete {
                side,
                expected,
                got,
            } => write!(
                f,
                "incomplete {} side: {got} levels, depth is {expected}",
                side.name()
            ),
        }
    }
}

/// Outcome of snapshot validation; carries every violation found.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationVerdict {
    pub violations: Vec<BookViolation>,
}

impl ValidationVerdict {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for ValidationVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_valid() {
            write!(f, "valid")
        } else {
            let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
            write!(f, "{}", parts.join("; "))
        }
    }
}

/// Policy for representing snapshots with fewer than `depth` levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PadPolicy {
    /// Incomplete snapshots are an error.
    #[default]
    Error,
    /// Missing levels repeat the deepest occupied level of that side.
    RepeatDeepest,
}

/// An L-level, two-sided book state on an integer tick grid.
///
/// Asks are stored best-first (ascending price), bids best-first
/// (descending price). A complete snapshot has exactly `depth` levels per
/// side. Values are immutable after construction by convention; every
/// operation is a pure function.
#[derive(Debug, Clone, PartialEq)]
pub struct LobSnapshot {
    pub time_index: u64,
    pub grid: TickGrid,
    /// Levels per side considered by the representation.
    pub depth: usize,
    pub asks: Vec<PriceLevel>,
    pub bids: Vec<PriceLevel>,
}

impl LobSnapshot {
    /// Build a snapshot and reject it if any invariant fails.
    pub fn new(
        time_index: u64,
        grid: TickGrid,
        depth: usize,
        asks: Vec<PriceLevel>,
        bids: Vec<PriceLevel>,
    ) -> Result<Self> {
        let snapshot = LobSnapshot {
            time_index,
            grid,
            depth,
            asks,
            bids,
        };
        let verdict = snapshot.validate();
        if verdict.is_valid() {
            Ok(snapshot)
        } else {
            Err(Error::InvalidSnapshot(verdict.to_string()))
        }
    }

    /// Check all invariants and report every violation.
    pub fn validate(&self) -> ValidationVerdict {
        let mut violations = Vec::new();
        for (side, levels) in [(Side::Ask, &self.asks), (Side::Bid, &self.bids)] {
            if levels.is_empty() {
                violations.push(BookViolation::EmptySide { side });
            } else if levels.len() != self.depth {
                violations.push(BookViolation::Incomplete {
                    side,
                    expected: self.depth,
                    got: levels.len(),
                });
            }
            for (i, level) in levels.iter().enumerate() {
                if level.volume == 0 {
                    violations.push(BookViolation::ZeroVolume { side, index: i });
                }
            }
            for (i, pair) in levels.windows(2).enumerate() {
                let ordered = match side {
                    Side::Ask => pair[0].price < pair[1].price,
                    Side::Bid => pair[0].price > pair[1].price,
                };
                if !ordered {
                    violations.push(BookViolation::NonMonotone { side, index: i + 1 });
                }
            }
        }
        if let (Some(ask), Some(bid)) = (self.asks.first(), self.bids.first()) {
            if bid.price >= ask.price {
                violations.push(BookViolation::Crossed {
                    best_bid: bid.price,
                    best_ask: ask.price,
                });
            }
        }
        ValidationVerdict { violations }
    }

    pub fn best_ask(&self) -> Option<&PriceLevel> {
        self.asks.first()
    }

    pub fn best_bid(&self) -> Option<&PriceLevel> {
        self.bids.first()
    }

    fn quotes(&self) -> Result<(i64, i64)> {
        let ask = self
            .best_ask()
            .ok_or_else(|| Error::InvalidSnapshot("empty ask side".into()))?;
        let bid = self
            .best_bid()
            .ok_or_else(|| Error::InvalidSnapshot("empty bid side".into()))?;
        Ok((ask.price, bid.price))
    }

    /// Mid-price in half-ticks: `best_ask + best_bid` tick counts. Exact,
    /// so perturbation invariance can be asserted with integer equality.
    pub fn mid_half_ticks(&self) -> Result<i64> {
        let (ask, bid) = self.quotes()?;
        Ok(ask + bid)
    }

    /// Mid-price in decimal currency units; may be a half-tick.
    pub fn mid_price(&self) -> Result<f64> {
        let half_ticks = self.mid_half_ticks()?;
        Ok(half_ticks as f64 / (2.0 * self.grid.price_scale() as f64))
    }

    /// Spread in ticks, strictly positive for a valid book.
    pub fn spread_ticks(&self) -> Result<i64> {
        let (ask, bid) = self.quotes()?;
        let spread = ask - bid;
        if spread <= 0 {
            return Err(Error::InvalidSnapshot(format!(
                "non-positive spread: best ask {ask}, best bid {bid}"
            )));
        }
        Ok(spread)
    }

    /// Spread in decimal currency units.
    pub fn spread(&self) -> Result<f64> {
        Ok(self.spread_ticks()? as f64 * self.grid.tick_size())
    }

    /// Canonical level-based feature vector of length `4 * depth`:
    /// `(ask price, ask volume, bid price, bid volume)` per level, level 1
    /// first. Prices are decimal currency units, volumes are counts.
    ///
    /// This is the one flattening used everywhere in the crate.
    pub fn to_feature_vector(&self) -> Result<Vec<f64>> {
        self.to_feature_vector_with(PadPolicy::Error)
    }

    /// Feature vector with an explicit policy for incomplete sides.
    pub fn to_feature_vector_with(&self, policy: PadPolicy) -> Result<Vec<f64>> {
        let mut features = Vec::with_capacity(4 * self.depth);
        for i in 0..self.depth {
            for (side, levels) in [(Side::Ask, &self.asks), (Side::Bid, &self.bids)] {
                let level = match levels.get(i) {
                    Some(level) => level,
                    None => match policy {
                        PadPolicy::RepeatDeepest => {
                            levels.last().ok_or(Error::IncompleteSnapshot {
                                side: side.name(),
                                got: 0,
                                expected: self.depth,
                            })?
                        }
                        PadPolicy::Error => {
                            return Err(Error::IncompleteSnapshot {
                                side: side.name(),
                                got: levels.len(),
                                expected: self.depth,
                            })
                        }
                    },
                };
                features.push(self.grid.ticks_to_price(level.price));
                features.push(level.volume as f64);
            }
        }
        Ok(features)
    }

    /// Inverse of [`to_feature_vector`](Self::to_feature_vector) for
    /// complete snapshots. Prices must sit on the grid and volumes must be
    /// whole positive counts.
    pub fn from_feature_vector(
        features: &[f64],
        grid: TickGrid,
        depth: usize,
        time_index: u64,
    ) -> Result<Self> {
        if depth == 0 || features.len() != 4 * depth {
            return Err(Error::DimensionMismatch {
                expected: 4 * depth.max(1),
                got: features.len(),
            });
        }
        let mut asks = Vec::with_capacity(depth);
        let mut bids = Vec::with_capacity(depth);
        for level in 0..depth {
            let chunk = &features[4 * level..4 * level + 4];
            for (offset, levels) in [(0usize, &mut asks), (2usize, &mut bids)] {
                let price = grid.price_to_ticks(chunk[offset])?;
                let raw_volume = chunk[offset + 1];
                let volume = raw_volume.round();
                if !raw_volume.is_finite()
                    || (raw_volume - volume).abs() > 1e-6
                    || volume < 1.0
                {
                    return Err(Error::OffGridVolume {
                        value: format!("{raw_volume}"),
                        line: None,
                    });
                }
                levels.push(PriceLevel::new(price, volume as u64));
            }
        }
        LobSnapshot::new(time_index, grid, depth, asks, bids)
    }

    pub fn is_complete(&self) -> bool {
        self.asks.len() == self.depth && self.bids.len() == self.depth
    }
}

/// T stacked level-based feature vectors, oldest row first.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotWindow {
    rows: Vec<Vec<f64>>,
    depth: usize,
}

impl SnapshotWindow {
    pub fn from_rows(rows: Vec<Vec<f64>>, depth: usize) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyInput("window must hold at least one row".into()));
        }
        for row in &rows {
            if row.len() != 4 * depth {
                return Err(Error::DimensionMismatch {
                    expected: 4 * depth,
                    got: row.len(),
                });
            }
        }
        Ok(SnapshotWindow { rows, depth })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn history_len(&self) -> usize {
        self.rows.len()
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn feature_dim(&self) -> usize {
        4 * self.depth
    }

    /// Row-major flattening, oldest row first: length `T * 4L`.
    pub fn flattened(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.rows.len() * self.feature_dim());
        for row in &self.rows {
            flat.extend_from_slice(row);
        }
        flat
    }
}

/// Stack the feature vectors of `series[end - history + 1 ..= end]`, oldest
/// first.
pub fn stack_window(series: &[LobSnapshot], end: usize, history: usize) -> Result<SnapshotWindow> {
    stack_window_with(series, end, history, PadPolicy::Error)
}

pub fn stack_window_with(
    series: &[LobSnapshot],
    end: usize,
    history: usize,
    policy: PadPolicy,
) -> Result<SnapshotWindow> {
    if history == 0 {
        return Err(Error::Range("window history must be at least 1".into()));
    }
    if end >= series.len() {
        return Err(Error::Range(format!(
            "end index {end} out of range for series of length {}",
            series.len()
        )));
    }
    if end + 1 < history {
        return Err(Error::Range(format!(
            "insufficient history: window of length {history} ending at index {end}"
        )));
    }
    let start = end + 1 - history;
    let first = &series[start];
    let mut rows = Vec::with_capacity(history);
    for snapshot in &series[start..=end] {
        if snapshot.depth != first.depth || snapshot.grid != first.grid {
            return Err(Error::InvalidSnapshot(
                "snapshots in a window must share depth and grid".into(),
            ));
        }
        rows.push(snapshot.to_feature_vector_with(policy)?);
    }
    SnapshotWindow::from_rows(rows, first.depth)
}

/// Mid-price series (decimal) of a snapshot series.
pub fn mid_series(series: &[LobSnapshot]) -> Result<Vec<f64>> {
    series.iter().map(|s| s.mid_price()).collect()
}
