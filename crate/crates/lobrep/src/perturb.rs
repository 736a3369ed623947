//! Empty-tick perturbation: fill unoccupied grid prices beyond the best
//! quotes with minimum-size orders and re-derive the visible L levels.
//!
//! The perturbation never touches the best quotes, so mid-price and spread
//! (and therefore the prediction labels) are invariant. Original orders are
//! never modified or removed from the underlying ladder; they can only be
//! pushed out of the visible top-L window.

use serde::{Deserialize, Serialize};

use crate::book::{LobSnapshot, PriceLevel, Side};
use crate::error::{Error, Result};

/// Which side(s) receive injected orders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    None,
    Ask,
    Bid,
    Both,
}

impl Scenario {
    /// Evaluation order used throughout reports: none, ask, bid, both.
    pub const ALL: [Scenario; 4] = [Scenario::None, Scenario::Ask, Scenario::Bid, Scenario::Both];

    pub fn affects(self, side: Side) -> bool {
        match self {
            Scenario::None => false,
            Scenario::Ask => side == Side::Ask,
            Scenario::Bid => side == Side::Bid,
            Scenario::Both => true,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::None => "none",
            Scenario::Ask => "ask",
            Scenario::Bid => "bid",
            Scenario::Both => "both",
        }
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.name())
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Scenario::None),
            "ask" => Ok(Scenario::Ask),
            "bid" => Ok(Scenario::Bid),
            "both" => Ok(Scenario::Both),
            other => Err(Error::Config(format!(
                "unknown scenario '{other}': expected none | ask | bid | both"
            ))),
        }
    }
}

/// Tick span over which gaps are filled, per side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FillRange {
    /// From one tick beyond the best quote to the deepest visible level.
    /// Beyond the deepest visible level the data cannot certify emptiness.
    #[default]
    ToDeepestVisible,
    /// From one tick beyond the best quote, spanning this many ticks. For
    /// synthetic books where the full ladder is known.
    Span(u32),
}

/// What to inject: sides, order size, and fill range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationSpec {
    pub scenario: Scenario,
    /// Injected order volume; 1 is the minimum allowed size.
    pub order_size: u64,
    pub fill_range: FillRange,
}

impl PerturbationSpec {
    pub fn new(scenario: Scenario) -> Self {
        PerturbationSpec {
            scenario,
            order_size: 1,
            fill_range: FillRange::ToDeepestVisible,
        }
    }

    pub fn with_order_size(mut self, order_size: u64) -> Self {
        self.order_size = order_size;
        self
    }

    pub fn with_fill_range(mut self, fill_range: FillRange) -> Self {
        self.fill_range = fill_range;
        self
    }

    fn check(&self) -> Result<()> {
        if self.order_size == 0 {
            return Err(Error::Config("order size must be at least 1".into()));
        }
        Ok(())
    }
}

/// One injected order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InjectedOrder {
    pub side: Side,
    /// Price in ticks.
    pub price: i64,
    pub volume: u64,
}

/// What a perturbation did to one snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationReport {
    pub scenario: Scenario,
    pub injected: Vec<InjectedOrder>,
    /// Per original ask level, whether it survives in the visible top-L.
    pub ask_visibility: Vec<bool>,
    /// Per original bid level, whether it survives in the visible top-L.
    pub bid_visibility: Vec<bool>,
    /// Fraction of the original 2L levels still visible.
    pub visible_fraction: f64,
    /// Euclidean distance between the pre and post 4L feature vectors.
    pub euclid_shift: f64,
    pub total_injected_volume: u64,
    /// Full post-perturbation ladders, including levels pushed beyond the
    /// visible window. Original orders are a sub-multiset of these.
    pub underlying_asks: Vec<PriceLevel>,
    pub underlying_bids: Vec<PriceLevel>,
}

impl PerturbationReport {
    /// Representation shift per unit of injected volume: the smoothness
    /// diagnostic. None when nothing was injected.
    pub fn shift_per_volume(&self) -> Option<f64> {
        if self.total_injected_volume == 0 {
            None
        } else {
            Some(self.euclid_shift / self.total_injected_volume as f64)
        }
    }
}

fn fill_limit(levels: &[PriceLevel], side: Side, range: FillRange) -> i64 {
    let best = levels[0].price;
    match (range, side) {
        (FillRange::ToDeepestVisible, _) => levels.last().unwrap().price,
        (FillRange::Span(span), Side::Ask) => best + span as i64,
        (FillRange::Span(span), Side::Bid) => best - span as i64,
    }
}

fn empty_ticks_of_side(levels: &[PriceLevel], side: Side, range: FillRange) -> Vec<i64> {
    let best = levels[0].price;
    let limit = fill_limit(levels, side, range);
    let mut gaps = Vec::new();
    let mut occupied = levels.iter().map(|l| l.price).peekable();
    let step: i64 = match side {
        Side::Ask => 1,
        Side::Bid => -1,
    };
    let mut price = best + step;
    while (price - limit) * step <= 0 {
        while occupied
            .peek()
            .is_some_and(|&p| (p - price) * step < 0)
        {
            occupied.next();
        }
        if occupied.peek() != Some(&price) {
            gaps.push(price);
        }
        price += step;
    }
    gaps
}

/// All unoccupied tick prices strictly beyond the best quote of `side`, up
/// to the side's deepest visible level. Ascending for asks, descending for
/// bids.
pub fn empty_ticks(snapshot: &LobSnapshot, side: Side) -> Result<Vec<i64>> {
    empty_ticks_in_range(snapshot, side, FillRange::ToDeepestVisible)
}

pub fn empty_ticks_in_range(
    snapshot: &LobSnapshot,
    side: Side,
    range: FillRange,
) -> Result<Vec<i64>> {
    let levels = match side {
        Side::Ask => &snapshot.asks,
        Side::Bid => &snapshot.bids,
    };
    if levels.is_empty() {
        return Err(Error::InvalidSnapshot(format!("empty {} side", side.name())));
    }
    Ok(empty_ticks_of_side(levels, side, range))
}

fn merge_ladder(original: &[PriceLevel], injected: &[InjectedOrder], side: Side) -> Vec<PriceLevel> {
    let mut merged: Vec<PriceLevel> = original.to_vec();
    merged.extend(
        injected
            .iter()
            .filter(|o| o.side == side)
            .map(|o| PriceLevel::synthetic(o.price, o.volume)),
    );
    match side {
        Side::Ask => merged.sort_by_key(|l| l.price),
        Side::Bid => merged.sort_by_key(|l| std::cmp::Reverse(l.price)),
    }
    merged
}

/// Apply the perturbation to one snapshot. Returns the re-derived visible
/// book together with a report of everything that was injected.
pub fn perturb_snapshot(
    snapshot: &LobSnapshot,
    spec: &PerturbationSpec,
) -> Result<(LobSnapshot, PerturbationReport)> {
    spec.check()?;
    let verdict = snapshot.validate();
    if !verdict.is_valid() {
        return Err(Error::InvalidSnapshot(verdict.to_string()));
    }

    if spec.scenario == Scenario::None {
        let report = PerturbationReport {
            scenario: Scenario::None,
            injected: Vec::new(),
            ask_visibility: vec![true; snapshot.asks.len()],
            bid_visibility: vec![true; snapshot.bids.len()],
            visible_fraction: 1.0,
            euclid_shift: 0.0,
            total_injected_volume: 0,
            underlying_asks: snapshot.asks.clone(),
            underlying_bids: snapshot.bids.clone(),
        };
        return Ok((snapshot.clone(), report));
    }

    let mut injected = Vec::new();
    for side in [Side::Ask, Side::Bid] {
        if !spec.scenario.affects(side) {
            continue;
        }
        for price in empty_ticks_in_range(snapshot, side, spec.fill_range)? {
            injected.push(InjectedOrder {
                side,
                price,
                volume: spec.order_size,
            });
        }
    }

    let underlying_asks = merge_ladder(&snapshot.asks, &injected, Side::Ask);
    let underlying_bids = merge_ladder(&snapshot.bids, &injected, Side::Bid);
    let visible_asks: Vec<PriceLevel> =
        underlying_asks.iter().take(snapshot.depth).copied().collect();
    let visible_bids: Vec<PriceLevel> =
        underlying_bids.iter().take(snapshot.depth).copied().collect();

    let ask_visibility = survival_mask(&snapshot.asks, &visible_asks);
    let bid_visibility = survival_mask(&snapshot.bids, &visible_bids);
    let surviving = ask_visibility.iter().filter(|&&v| v).count()
        + bid_visibility.iter().filter(|&&v| v).count();
    let original_levels = snapshot.asks.len() + snapshot.bids.len();

    let perturbed = LobSnapshot::new(
        snapshot.time_index,
        snapshot.grid,
        snapshot.depth,
        visible_asks,
        visible_bids,
    )?;
    let euclid_shift = representation_shift(snapshot, &perturbed)?;
    let total_injected_volume: u64 = injected.iter().map(|o| o.volume).sum();

    let report = PerturbationReport {
        scenario: spec.scenario,
        injected,
        ask_visibility,
        bid_visibility,
        visible_fraction: surviving as f64 / original_levels as f64,
        euclid_shift,
        total_injected_volume,
        underlying_asks,
        underlying_bids,
    };
    Ok((perturbed, report))
}

fn survival_mask(original: &[PriceLevel], visible: &[PriceLevel]) -> Vec<bool> {
    original
        .iter()
        .map(|level| visible.iter().any(|v| v.price == level.price && !v.synthetic))
        .collect()
}

/// Euclidean distance between the level-based feature vectors of two
/// snapshots sharing depth and grid.
pub fn representation_shift(before: &LobSnapshot, after: &LobSnapshot) -> Result<f64> {
    if before.depth != after.depth {
        return Err(Error::DimensionMismatch {
            expected: 4 * before.depth,
            got: 4 * after.depth,
        });
    }
    if before.grid != after.grid {
        return Err(Error::InvalidSnapshot(
            "representation shift requires a shared tick grid".into(),
        ));
    }
    let fb = before.to_feature_vector()?;
    let fa = after.to_feature_vector()?;
    let sum_sq: f64 = fb
        .iter()
        .zip(fa.iter())
        .map(|(b, a)| (b - a) * (b - a))
        .sum();
    Ok(sum_sq.sqrt())
}

/// Perturb every snapshot of a series independently (stateless per step).
pub fn perturb_series(
    series: &[LobSnapshot],
    spec: &PerturbationSpec,
) -> Result<(Vec<LobSnapshot>, Vec<PerturbationReport>)> {
    let mut snapshots = Vec::with_capacity(series.len());
    let mut reports = Vec::with_capacity(series.len());
    for (index, snapshot) in series.iter().enumerate() {
        let (perturbed, report) = perturb_snapshot(snapshot, spec).map_err(|e| {
            Error::InvalidSnapshot(format!("snapshot {index}: {e}"))
        })?;
        snapshots.push(perturbed);
        reports.push(report);
    }
    Ok((snapshots, reports))
}
