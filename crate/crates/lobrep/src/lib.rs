//! Level-based limit order book representations, mid-price-preserving
//! empty-tick perturbations, and a harness that measures how much
//! price-movement classifiers trained on clean data degrade when the book
//! representation is perturbed at test time.
//!
//! The crate is organized around the pipeline:
//!
//! - [`book`]: tick-grid snapshots, validation, and the canonical
//!   `(ask price, ask volume, bid price, bid volume)` per-level feature
//!   interleaving stacked over T steps.
//! - [`ingest`]: FI-2010-style matrices, a generic snapshot CSV, synthetic
//!   fixtures, and train-only normalization statistics.
//! - [`perturb`]: filling empty ticks beyond the best quotes with
//!   minimum-size orders and re-deriving the visible top-L book, plus shift
//!   and visibility diagnostics.
//! - [`label`]: three-class micro-movement labels from mid-price series.
//! - [`model`]: from-scratch logistic regression and MLP classifiers with
//!   deterministic seeded training.
//! - [`eval`]: confusion matrices, accuracy and macro precision/recall/F.
//! - [`experiment`]: the end-to-end driver behind the `lobrep` binary.
//!
//! See the `examples/` directory for one runnable walkthrough per
//! capability; `examples/fig2_walkthrough.rs` is the best starting point.

pub mod book;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod ingest;
pub mod label;
pub mod model;
pub mod perturb;

pub use book::{LobSnapshot, PriceLevel, SnapshotWindow, TickGrid};
pub use error::{Error, Result};
pub use label::ClassLabel;
pub use perturb::{PerturbationReport, PerturbationSpec, Scenario};
