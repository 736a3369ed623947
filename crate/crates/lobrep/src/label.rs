//! Micro-movement labels computed from mid-price series, plus an audit
//! path for datasets that ship precomputed labels.
//!
//! The movement at time t is the relative difference between the mean of
//! the k strictly-future mid-prices and the current mid-price. Movements
//! at or beyond the threshold are directional; the stationary band is
//! strict, so the boundary belongs to the directional class.

use crate::error::{Error, Result};

/// Three-class movement label. Numeric codes match the FI-2010 encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassLabel {
    Up,
    Stationary,
    Down,
}

pub const ALL_CLASSES: [ClassLabel; 3] = [ClassLabel::Up, ClassLabel::Stationary, ClassLabel::Down];

impl ClassLabel {
    pub fn code(self) -> u8 {
        match self {
            ClassLabel::Up => 1,
            ClassLabel::Stationary => 2,
            ClassLabel::Down => 3,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            1 => Ok(ClassLabel::Up),
            2 => Ok(ClassLabel::Stationary),
            3 => Ok(ClassLabel::Down),
            other => Err(Error::InvalidLabel(other)),
        }
    }

    /// Zero-based index used for confusion-matrix axes and model outputs.
    pub fn index(self) -> usize {
        self.code() as usize - 1
    }

    pub fn from_index(index: usize) -> Result<Self> {
        Self::from_code(index as u8 + 1)
    }

    pub fn name(self) -> &'static str {
        match self {
            ClassLabel::Up => "up",
            ClassLabel::Stationary => "stationary",
            ClassLabel::Down => "down",
        }
    }
}

impl std::fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.name())
    }
}

/// Labeling parameters: prediction horizon k and movement threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelConfig {
    pub horizon: usize,
    pub alpha: f64,
}

impl Default for LabelConfig {
    fn default() -> Self {
        LabelConfig {
            horizon: 50,
            alpha: 0.002,
        }
    }
}

impl LabelConfig {
    pub fn new(horizon: usize, alpha: f64) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::Config("label horizon must be at least 1".into()));
        }
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::Config(format!(
                "movement threshold must be positive, got {alpha}"
            )));
        }
        Ok(LabelConfig { horizon, alpha })
    }
}

/// Arithmetic mean of the k strictly-future mid-prices after t.
pub fn smoothed_future_mid(mids: &[f64], t: usize, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Range("horizon must be at least 1".into()));
    }
    if t + k >= mids.len() {
        return Err(Error::Range(format!(
            "insufficient future data: t={t}, k={k}, series length {}",
            mids.len()
        )));
    }
    let sum: f64 = mids[t + 1..=t + k].iter().sum();
    Ok(sum / k as f64)
}

/// Signed relative movement of the smoothed future mid against the mid at t.
pub fn micro_movement(mids: &[f64], t: usize, k: usize) -> Result<f64> {
    let current = mids[t];
    if !current.is_finite() || current <= 0.0 {
        return Err(Error::InvalidSnapshot(format!(
            "mid-price at t={t} must be positive, got {current}"
        )));
    }
    let future = smoothed_future_mid(mids, t, k)?;
    Ok((future - current) / current)
}

/// Map a movement to its class. The stationary band `(-alpha, alpha)` is
/// open, so `|l| = alpha` is directional.
pub fn classify(movement: f64, alpha: f64) -> Result<ClassLabel> {
    if !movement.is_finite() {
        return Err(Error::NonFinite(format!("movement {movement}")));
    }
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::Config(format!(
            "movement threshold must be positive, got {alpha}"
        )));
    }
    Ok(if movement >= alpha {
        ClassLabel::Up
    } else if movement <= -alpha {
        ClassLabel::Down
    } else {
        ClassLabel::Stationary
    })
}

/// Label every time index with enough future data: t = 0 .. |mids| - k - 1
/// (exclusive). Trailing indices without k future points are dropped.
pub fn label_series(mids: &[f64], config: &LabelConfig) -> Result<Vec<(usize, ClassLabel)>> {
    let k = config.horizon;
    if mids.len() <= k {
        return Err(Error::Range(format!(
            "series of length {} is too short for horizon {k}",
            mids.len()
        )));
    }
    let label_count = mids.len() - k - 1;
    let mut labels = Vec::with_capacity(label_count);
    for t in 0..label_count {
        let movement = micro_movement(mids, t, k)?;
        labels.push((t, classify(movement, config.alpha)?));
    }
    Ok(labels)
}

/// One comparison row of a label audit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuditRow {
    pub t: usize,
    pub computed: ClassLabel,
    pub provided: ClassLabel,
    pub matches: bool,
}

/// Computed-vs-provided label agreement. Reported, never asserted: whether
/// an external dataset used exactly this formula is not verifiable here.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub rows: Vec<AuditRow>,
    pub agreement: f64,
    /// Per class of the provided labels: (class, agreement, support).
    pub per_class: Vec<(ClassLabel, f64, usize)>,
}

impl AuditReport {
    /// Delimited text table: t, computed, provided, match.
    pub fn to_table(&self) -> String {
        let mut out = String::from("t\tcomputed\tprovided\tmatch\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                row.t,
                row.computed.code(),
                row.provided.code(),
                row.matches as u8
            ));
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = format!(
            "overall agreement: {:.2}% over {} labels\n",
            100.0 * self.agreement,
            self.rows.len()
        );
        for (class, agreement, support) in &self.per_class {
            out.push_str(&format!(
                "  {}: {:.2}% of {} provided\n",
                class,
                100.0 * agreement,
                support
            ));
        }
        out
    }
}

/// Compare labels computed from `mids` against provided labels aligned by
/// time index (`provided[t]` is the label of column t).
pub fn audit_labels(
    mids: &[f64],
    provided: &[ClassLabel],
    config: &LabelConfig,
) -> Result<AuditReport> {
    let computed = label_series(mids, config)?;
    let mut rows = Vec::with_capacity(computed.len());
    for (t, label) in computed {
        let given = *provided.get(t).ok_or_else(|| {
            Error::Range(format!("no provided label at t={t} ({} given)", provided.len()))
        })?;
        rows.push(AuditRow {
            t,
            computed: label,
            provided: given,
            matches: label == given,
        });
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput("no comparable labels".into()));
    }
    let matched = rows.iter().filter(|r| r.matches).count();
    let per_class = ALL_CLASSES
        .iter()
        .map(|&class| {
            let of_class: Vec<_> = rows.iter().filter(|r| r.provided == class).collect();
            let support = of_class.len();
            let agree = of_class.iter().filter(|r| r.matches).count();
            let rate = if support == 0 {
                0.0
            } else {
                agree as f64 / support as f64
            };
            (class, rate, support)
        })
        .collect();
    Ok(AuditReport {
        agreement: matched as f64 / rows.len() as f64,
        rows,
        per_class,
    })
}
