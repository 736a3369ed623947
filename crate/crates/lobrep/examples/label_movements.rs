//! Micro-movement labeling on a synthetic mid-price path, and the label
//! commutation that makes the perturbation label-preserving.
//!
//! Run with: cargo run --example label_movements

use lobrep::book::mid_series;
use lobrep::ingest::{deep_signal_series, DeepSignalConfig};
use lobrep::label::{label_series, micro_movement, ClassLabel, LabelConfig};
use lobrep::perturb::{perturb_series, PerturbationSpec, Scenario};

fn main() -> lobrep::Result<()> {
    let config = DeepSignalConfig {
        len: 600,
        seed: 5,
        horizon: 10,
        alpha: 0.001,
        ..DeepSignalConfig::default()
    };
    let series = deep_signal_series(&config)?;
    let mids = mid_series(&series)?;
    let label_config = LabelConfig::new(config.horizon, config.alpha)?;
    let labels = label_series(&mids, &label_config)?;

    println!("first ten labels (k = {}, alpha = {}):", config.horizon, config.alpha);
    println!("  t   mid      movement     label");
    for &(t, label) in labels.iter().take(10) {
        println!(
            "  {:<3} {:<8.2} {:>+9.5}    {}",
            t,
            mids[t],
            micro_movement(&mids, t, config.horizon)?,
            label
        );
    }

    let mut counts = [0usize; 3];
    for &(_, label) in &labels {
        counts[label.index()] += 1;
    }
    let total = labels.len() as f64;
    println!(
        "\nclass mix over {} labels: up {:.1}%, stationary {:.1}%, down {:.1}%",
        labels.len(),
        100.0 * counts[ClassLabel::Up.index()] as f64 / total,
        100.0 * counts[ClassLabel::Stationary.index()] as f64 / total,
        100.0 * counts[ClassLabel::Down.index()] as f64 / total,
    );

    // Mid-prices are invariant under the perturbation, so the labels of a
    // perturbed series are identical: the prediction target never moves.
    let (perturbed, _) = perturb_series(&series, &PerturbationSpec::new(Scenario::Both))?;
    let perturbed_labels = label_series(&mid_series(&perturbed)?, &label_config)?;
    assert_eq!(labels, perturbed_labels);
    println!("\nlabels recomputed on the both-side-perturbed series are identical (checked)");
    Ok(())
}
