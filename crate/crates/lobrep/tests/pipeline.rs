//! Harness-level integration tests: scenario None transparency,
//! scenario-independent training artifacts, and end-to-end runs over the
//! FI-2010 matrix and snapshot CSV sources.

use std::path::Path;

use lobrep::book::LobSnapshot;
use lobrep::error::Error;
use lobrep::eval::confusion;
use lobrep::experiment::{
    run_evaluate, run_experiment, run_label_audit, run_train, ExperimentConfig,
};
use lobrep::ingest::{
    build_dataset, deep_signal_series, fit_normalization, write_snapshot_csv, DeepSignalConfig,
};
use lobrep::label::{label_series, ClassLabel, LabelConfig};
use lobrep::model::{predict, train, ModelKind, TrainConfig, TrainingSet};
use lobrep::perturb::Scenario;

fn deep_signal_config(out: &Path, len: usize) -> ExperimentConfig {
    ExperimentConfig::from_toml_str(&format!(
        r#"
seed = 9
out_dir = "{}"
history = 5
horizon = 8
models = ["lr"]

[data]
kind = "deep-signal"
len = {len}
train_fraction = 0.8

[train.lr]
epochs = 4
"#,
        out.display()
    ))
    .unwrap()
}

/// Render a snapshot series as FI-2010 matrix text with provided labels.
fn matrix_text(series: &[LobSnapshot], labels_per_row: &[Vec<u8>]) -> String {
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
                        l.volume.to_string()
                    }
                })
                .collect();
            lines.push(row.join(" "));
        }
    }
    for row in labels_per_row {
        lines.push(row.iter().map(u8::to_string).collect::<Vec<_>>().join(" "));
    }
    lines.join("\n")
}

/// Deep-signal series with its computed labels replicated into all five
/// FI-2010 label rows (tail columns padded stationary).
fn synthetic_fi2010_files(dir: &Path, len: usize, horizon: usize) -> (String, String) {
    let series = deep_signal_series(&DeepSignalConfig {
        len,
        seed: 21,
        horizon,
        alpha: 0.002,
        depth: 10,
    })
    .unwrap();
    let mids: Vec<f64> = series.iter().map(|s| s.mid_price().unwrap()).collect();
    let labels = label_series(&mids, &LabelConfig::new(horizon, 0.002).unwrap()).unwrap();
    let mut per_column = vec![2u8; len];
    for (t, label) in labels {
        per_column[t] = label.code();
    }
    let label_rows: Vec<Vec<u8>> = (0..5).map(|_| per_column.clone()).collect();

    let cut = len * 3 / 4;
    let train_rows: Vec<Vec<u8>> = label_rows.iter().map(|r| r[..cut].to_vec()).collect();
    let test_rows: Vec<Vec<u8>> = label_rows.iter().map(|r| r[cut..].to_vec()).collect();
    let train_path = dir.join("train.txt");
    let test_path = dir.join("test.txt");
    std::fs::write(&train_path, matrix_text(&series[..cut], &train_rows)).unwrap();
    std::fs::write(&test_path, matrix_text(&series[cut..], &test_rows)).unwrap();
    (
        train_path.to_string_lossy().into_owned(),
        test_path.to_string_lossy().into_owned(),
    )
}

#[test]
fn scenario_none_equals_pipeline_without_perturbation() {
    let dir = tempfile::tempdir().unwrap();
    let config = deep_signal_config(&dir.path().join("run"), 400);
    let outcome = run_experiment(&config).unwrap();
    let none_report = outcome
        .reports
        .iter()
        .find(|r| r.scenario == Scenario::None)
        .unwrap();

    // Rebuild the evaluation by hand with the perturbation module absent.
    let split = lobrep::experiment::load_split(&config).unwrap();
    let train_set =
        build_dataset(&split.train, split.train_labels.as_source(), config.history).unwrap();
    let test_set =
        build_dataset(&split.test, split.test_labels.as_source(), config.history).unwrap();
    let stats = fit_normalization(&train_set.windows).unwrap();
    let training_set =
        TrainingSet::from_windows(&train_set.windows, &train_set.labels, &stats).unwrap();
    let mut train_config = TrainConfig {
        epochs: 4,
        ..TrainConfig::default()
    };
    train_config.seed = config.train_config_for(ModelKind::Lr).seed;
    let model = train(&training_set, ModelKind::Lr, &train_config).unwrap();

    let preds: Vec<ClassLabel> = test_set
        .windows
        .iter()
        .map(|w| predict(&model.params, w, &stats).unwrap())
        .collect();
    let matrix = confusion(&preds, &test_set.labels).unwrap();
    assert_eq!(none_report.matrix, matrix);
}

#[test]
fn evaluation_never_rewrites_training_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let config = deep_signal_config(&dir.path().join("run"), 400);
    run_train(&config, &[ModelKind::Lr]).unwrap();
    let params_path = config.out_dir.join("params_lr.txt");
    let stats_path = config.out_dir.join("stats.tsv");
    let params_before = std::fs::read(&params_path).unwrap();
    let stats_before = std::fs::read(&stats_path).unwrap();

    // All four scenario evaluations consume the same parameter file.
    run_evaluate(&config, &[ModelKind::Lr], &Scenario::ALL).unwrap();
    assert_eq!(std::fs::read(&params_path).unwrap(), params_before);
    assert_eq!(std::fs::read(&stats_path).unwrap(), stats_before);
}

#[test]
fn fi2010_source_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let (train_path, test_path) = synthetic_fi2010_files(dir.path(), 400, 10);
    let config = ExperimentConfig::from_toml_str(&format!(
        r#"
seed = 13
out_dir = "{out}"
history = 5
horizon = 10
models = ["lr", "mlp"]

[data]
kind = "fi2010"
train_path = "{train_path}"
test_path = "{test_path}"
price_scale = 100
volume_scale = 1

[train.lr]
epochs = 5

[train.mlp]
epochs = 5
hidden_sizes = [16]
"#,
        out = dir.path().join("run").display(),
    ))
    .unwrap();
    let outcome = run_experiment(&config).unwrap();
    assert_eq!(outcome.reports.len(), 8);
    // Provided labels cover every column, so window count is columns-T+1.
    let total: u64 = outcome
        .reports
        .iter()
        .find(|r| r.model == "lr" && r.scenario == Scenario::None)
        .unwrap()
        .matrix
        .total();
    assert_eq!(total, (100 - 5 + 1) as u64);
    assert!(config.out_dir.join("report.tsv").exists());
}

#[test]
fn label_audit_is_self_consistent_on_matching_labels() {
    let dir = tempfile::tempdir().unwrap();
    let (train_path, test_path) = synthetic_fi2010_files(dir.path(), 400, 10);
    let config = ExperimentConfig::from_toml_str(&format!(
        r#"
out_dir = "{out}"
horizon = 10
[data]
kind = "fi2010"
train_path = "{train_path}"
test_path = "{test_path}"
price_scale = 100
volume_scale = 1
"#,
        out = dir.path().join("run").display(),
    ))
    .unwrap();
    let report = run_label_audit(&config).unwrap();
    // The label rows were generated by this toolkit's own labeler.
    assert_eq!(report.agreement, 1.0);
    assert!(config.out_dir.join("label_audit.tsv").exists());
}

#[test]
fn snapshot_csv_source_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let series = deep_signal_series(&DeepSignalConfig {
        len: 400,
        seed: 3,
        horizon: 8,
        alpha: 0.002,
        depth: 10,
    })
    .unwrap();
    let csv_path = dir.path().join("books.csv");
    write_snapshot_csv(&csv_path, &series).unwrap();

    let config = ExperimentConfig::from_toml_str(&format!(
        r#"
seed = 4
out_dir = "{out}"
history = 5
horizon = 8
models = ["lr"]

[data]
kind = "snapshot-csv"
path = "{path}"
tick_size = 0.01
train_fraction = 0.8

[train.lr]
epochs = 4
"#,
        out = dir.path().join("run").display(),
        path = csv_path.display(),
    ))
    .unwrap();
    let outcome = run_experiment(&config).unwrap();
    assert_eq!(outcome.reports.len(), 4);
    let diag_both = outcome
        .diagnostics
        .iter()
        .find(|d| d.scenario == Scenario::Both)
        .unwrap();
    assert!(diag_both.mean_euclid_shift > 0.0);
    assert!(diag_both.mean_visible_fraction < 1.0);
}

#[test]
fn stage_errors_carry_the_stage_name() {
    let dir = tempfile::tempdir().unwrap();
    // A series far too short for the horizon fails in the dataset stage.
    let config = deep_signal_config(&dir.path().join("run"), 20);
    let err = run_experiment(&config).unwrap_err();
    match err {
        Error::Stage { stage, .. } => assert_eq!(stage, "dataset"),
        other => panic!("expected a stage error, got {other:?}"),
    }
}
