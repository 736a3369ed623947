//! Confusion matrices and the four report metrics.
//!
//! Accuracy is the unbalanced fraction of exact matches; precision, recall
//! and F-score are averaged across classes in an unweighted (macro) manner
//! to neutralize class imbalance. The macro F-score is the unweighted mean
//! of per-class F1 values. Per-class ratios with a zero denominator
//! contribute 0 and raise a report flag so degenerate predictors still get
//! finite, comparable numbers.

use crate::error::{Error, Result};
use crate::label::{ClassLabel, ALL_CLASSES};
use crate::perturb::Scenario;

/// 3x3 counts; rows are true classes, columns predicted classes, both in
/// Up/Stationary/Down order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 3]; 3],
}

impl ConfusionMatrix {
    pub fn record(&mut self, truth: ClassLabel, pred: ClassLabel) {
        self.counts[truth.index()][pred.index()] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..3).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sum(&self, class: ClassLabel) -> u64 {
        self.counts[class.index()].iter().sum()
    }

    pub fn column_sum(&self, class: ClassLabel) -> u64 {
        self.counts.iter().map(|row| row[class.index()]).sum()
    }

    /// Merge partial counts; accumulation is associative and commutative.
    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (mine, theirs) in self.counts.iter_mut().flatten().zip(other.counts.iter().flatten()) {
            *mine += theirs;
        }
    }

    /// Delimited text rendering with a header row and true-class row labels.
    pub fn to_table(&self) -> String {
        let mut out = String::from("true\\pred\tup\tstationary\tdown\n");
        for class in ALL_CLASSES {
            let row = self.counts[class.index()];
            out.push_str(&format!("{}\t{}\t{}\t{}\n", class, row[0], row[1], row[2]));
        }
        out
    }
}

/// Count (truth, prediction) pairs.
pub fn confusion(preds: &[ClassLabel], truths: &[ClassLabel]) -> Result<ConfusionMatrix> {
    if preds.len() != truths.len() {
        return Err(Error::DimensionMismatch {
            expected: truths.len(),
            got: preds.len(),
        });
    }
    let mut matrix = ConfusionMatrix::default();
    for (&pred, &truth) in preds.iter().zip(truths) {
        matrix.record(truth, pred);
    }
    Ok(matrix)
}

/// Per-class precision/recall/F1 with zero-denominator flags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub class: ClassLabel,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub precision_defined: bool,
    pub recall_defined: bool,
}

/// The four report metrics plus per-class detail.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub per_class: [ClassMetrics; 3],
    /// Human-readable notes about undefined ratios counted as zero.
    pub flags: Vec<String>,
}

/// Compute all metrics from a confusion matrix.
pub fn metrics(matrix: &ConfusionMatrix) -> Result<Metrics> {
    let total = matrix.total();
    if total == 0 {
        return Err(Error::EmptyInput("empty confusion matrix".into()));
    }
    let mut flags = Vec::new();
    let per_class = ALL_CLASSES.map(|class| {
        let tp = matrix.counts[class.index()][class.index()] as f64;
        let predicted = matrix.column_sum(class);
        let actual = matrix.row_sum(class);
        let precision_defined = predicted > 0;
        let recall_defined = actual > 0;
        if !precision_defined {
            flags.push(format!("precision undefined for {class} (never predicted); counted as 0"));
        }
        if !recall_defined {
            flags.push(format!("recall undefined for {class} (no true samples); counted as 0"));
        }
        let precision = if precision_defined { tp / predicted as f64 } else { 0.0 };
        let recall = if recall_defined { tp / actual as f64 } else { 0.0 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        ClassMetrics {
            class,
            precision,
            recall,
            f1,
            precision_defined,
            recall_defined,
        }
    });

    let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / 3.0;
    Ok(Metrics {
        accuracy: matrix.trace() as f64 / total as f64,
        macro_precision: mean(|m| m.precision),
        macro_recall: mean(|m| m.recall),
        macro_f1: mean(|m| m.f1),
        per_class,
        flags,
    })
}

/// One (model, scenario) evaluation cell.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub model: String,
    pub scenario: Scenario,
    pub metrics: Metrics,
    pub matrix: ConfusionMatrix,
}

impl EvalReport {
    pub fn new(model: impl Into<String>, scenario: Scenario, matrix: ConfusionMatrix) -> Result<Self> {
        Ok(EvalReport {
            model: model.into(),
            scenario,
            metrics: metrics(&matrix)?,
            matrix,
        })
    }
}

fn scenario_order(scenario: Scenario) -> usize {
    Scenario::ALL.iter().position(|&s| s == scenario).unwrap_or(usize::MAX)
}

/// Human-readable table: rows grouped by model, one row per scenario in
/// none/ask/bid/both order, metrics as percentages to one decimal.
pub fn render_table(reports: &[EvalReport]) -> Result<String> {
    if reports.is_empty() {
        return Err(Error::EmptyInput("no evaluation reports".into()));
    }
    let mut ordered: Vec<&EvalReport> = reports.iter().collect();
    ordered.sort_by_key(|r| (r.model.clone(), scenario_order(r.scenario)));

    let mut out = String::new();
    out.push_str(&format!(
        "{:<12} {:<10} {:>9} {:>10} {:>7} {:>8}\n",
        "model", "scenario", "accuracy", "precision", "recall", "f-score"
    ));
    let mut current_model: Option<&str> = None;
    for report in ordered {
        if current_model.is_some() && current_model != Some(report.model.as_str()) {
            out.push('\n');
        }
        current_model = Some(report.model.as_str());
        let m = &report.metrics;
        out.push_str(&format!(
            "{:<12} {:<10} {:>8.1}% {:>9.1}% {:>6.1}% {:>7.1}%\n",
            report.model,
            report.scenario,
            100.0 * m.accuracy,
            100.0 * m.macro_precision,
            100.0 * m.macro_recall,
            100.0 * m.macro_f1,
        ));
    }
    Ok(out)
}

/// Machine-readable report: one header row, then one full-precision row per
/// (model, scenario), tab-delimited, in the same order as the table.
pub fn render_machine_report(reports: &[EvalReport]) -> Result<String> {
    if reports.is_empty() {
        return Err(Error::EmptyInput("no evaluation reports".into()));
    }
    let mut ordered: Vec<&EvalReport> = reports.iter().collect();
    ordered.sort_by_key(|r| (r.model.clone(), scenario_order(r.scenario)));

    let mut out = String::from("model\tscenario\taccuracy\tprecision\trecall\tfscore\n");
    for report in ordered {
        let m = &report.metrics;
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            report.model, report.scenario, m.accuracy, m.macro_precision, m.macro_recall, m.macro_f1
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn label(code: u8) -> ClassLabel {
        ClassLabel::from_code(code).unwrap()
    }

    fn labels(codes: &[u8]) -> Vec<ClassLabel> {
        codes.iter().map(|&c| label(c)).collect()
    }

    #[test]
    fn perfect_predictions_are_diagonal() {
        let truths = labels(&[1, 2, 3, 1, 2, 3]);
        let matrix = confusion(&truths, &truths).unwrap();
        assert_eq!(matrix.trace(), 6);
        assert_eq!(matrix.total(), 6);
        let m = metrics(&matrix).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.macro_precision, 1.0);
        assert_eq!(m.macro_recall, 1.0);
        assert_eq!(m.macro_f1, 1.0);
        assert!(m.flags.is_empty());
    }

    #[test]
    fn all_stationary_predictor_on_unbalanced_split() {
        // 28/47/25 truths, everything predicted stationary.
        let mut truths = vec![label(1); 28];
        truths.extend(vec![label(2); 47]);
        truths.extend(vec![label(3); 25]);
        let preds = vec![label(2); 100];
        let matrix = confusion(&preds, &truths).unwrap();
        // Only the stationary column carries mass.
        for class in ALL_CLASSES {
            if class != ClassLabel::Stationary {
                assert_eq!(matrix.column_sum(class), 0);
            }
        }
        let m = metrics(&matrix).unwrap();
        assert!((m.accuracy - 0.47).abs() < 1e-12);
        assert!(!m.flags.is_empty());
    }

    #[test]
    fn hand_computed_matrix_metrics() {
        let matrix = ConfusionMatrix {
            counts: [[5, 0, 0], [0, 0, 5], [0, 0, 5]],
        };
        let m = metrics(&matrix).unwrap();
        assert!((m.accuracy - 10.0 / 15.0).abs() < 1e-12);
        assert_eq!(m.per_class[0].precision, 1.0);
        assert_eq!(m.per_class[1].precision, 0.0);
        assert!(!m.per_class[1].precision_defined);
        assert_eq!(m.per_class[2].precision, 0.5);
        assert!((m.macro_precision - 0.5).abs() < 1e-12);
    }

    #[test]
    fn empty_input_yields_zero_matrix_but_no_metrics() {
        let matrix = confusion(&[], &[]).unwrap();
        assert_eq!(matrix.total(), 0);
        assert!(matches!(metrics(&matrix), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let a = labels(&[1, 2]);
        let b = labels(&[1]);
        assert!(matches!(
            confusion(&a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn duplicated_pair_changes_one_cell_by_one() {
        let truths = labels(&[1, 2, 3]);
        let preds = labels(&[1, 3, 3]);
        let base = confusion(&preds, &truths).unwrap();
        let mut truths2 = truths.clone();
        let mut preds2 = preds.clone();
        truths2.push(label(2));
        preds2.push(label(3));
        let grown = confusion(&preds2, &truths2).unwrap();
        let mut diff = 0;
        for i in 0..3 {
            for j in 0..3 {
                diff += grown.counts[i][j] - base.counts[i][j];
            }
        }
        assert_eq!(diff, 1);
        assert_eq!(
            grown.counts[label(2).index()][label(3).index()],
            base.counts[label(2).index()][label(3).index()] + 1
        );
    }

    #[test]
    fn accuracy_invariant_under_class_permutation() {
        let truths = labels(&[1, 1, 2, 3, 2, 1, 3, 3, 2, 2]);
        let preds = labels(&[1, 2, 2, 3, 3, 1, 1, 3, 2, 1]);
        let base = metrics(&confusion(&preds, &truths).unwrap()).unwrap();

        // Cyclic permutation 1 -> 2 -> 3 -> 1 applied to both vectors.
        let permute = |l: ClassLabel| label(l.code() % 3 + 1);
        let p_truths: Vec<ClassLabel> = truths.iter().map(|&l| permute(l)).collect();
        let p_preds: Vec<ClassLabel> = preds.iter().map(|&l| permute(l)).collect();
        let moved = metrics(&confusion(&p_preds, &p_truths).unwrap()).unwrap();

        assert!((base.accuracy - moved.accuracy).abs() < 1e-12);
        assert!((base.macro_precision - moved.macro_precision).abs() < 1e-12);
        assert!((base.macro_recall - moved.macro_recall).abs() < 1e-12);
        assert!((base.macro_f1 - moved.macro_f1).abs() < 1e-12);
    }

    #[test]
    fn tables_group_models_and_order_scenarios() {
        let truths = labels(&[1, 2, 3, 2]);
        let preds = labels(&[1, 2, 3, 3]);
        let matrix = confusion(&preds, &truths).unwrap();
        let mut reports = Vec::new();
        for model in ["mlp", "lr"] {
            for scenario in [Scenario::Both, Scenario::None, Scenario::Bid, Scenario::Ask] {
                reports.push(EvalReport::new(model, scenario, matrix).unwrap());
            }
        }
        let table = render_table(&reports).unwrap();
        let lines: Vec<&str> = table.lines().filter(|l| !l.trim().is_empty()).collect();
        assert_eq!(lines.len(), 9);
        assert!(lines[1].starts_with("lr") && lines[1].contains("none"));
        assert!(lines[4].contains("both"));
        assert!(lines[5].starts_with("mlp") && lines[5].contains("none"));

        let machine = render_machine_report(&reports).unwrap();
        assert!(machine.starts_with("model\tscenario\taccuracy\tprecision\trecall\tfscore\n"));
        assert_eq!(machine.lines().count(), 9);

        // Human table agrees with the machine report to rounding.
        let machine_line = machine.lines().nth(1).unwrap();
        let accuracy: f64 = machine_line.split('\t').nth(2).unwrap().parse().unwrap();
        let rendered = format!("{:.1}%", 100.0 * accuracy);
        assert!(lines[1].contains(&rendered));
    }

    #[test]
    fn single_report_renders_one_row() {
        let truths = labels(&[1, 2, 3]);
        let matrix = confusion(&truths, &truths).unwrap();
        let report = EvalReport::new("lr", Scenario::None, matrix).unwrap();
        let table = render_table(std::slice::from_ref(&report)).unwrap();
        assert_eq!(table.lines().count(), 2);
    }
}
