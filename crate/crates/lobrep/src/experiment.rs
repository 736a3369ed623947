//! End-to-end experiment driver: train classifiers on unperturbed data and
//! measure their decay under the four perturbation scenarios.
//!
//! The pipeline is: ingest -> fit normalization on the training split ->
//! train each model on unperturbed normalized windows -> for each scenario
//! perturb the raw test snapshots, re-window, normalize with the training
//! statistics, predict, evaluate. Everything is deterministic given the
//! configuration: all randomness flows from the global seed through named
//! per-stage sub-seeds, and machine-readable outputs are byte-stable.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::book::{LobSnapshot, TickGrid};
use crate::error::{Error, Result};
use crate::eval::{confusion, render_machine_report, render_table, EvalReport};
use crate::ingest::{
    build_dataset, deep_signal_series, fit_normalization, load_fi2010, parse_snapshot_csv,
    rewindow, synth_fixture, DeepSignalConfig, Fi2010Config, Fixture, LabelSource, LabeledDataset,
    NormalizationStats,
};
use crate::label::{audit_labels, AuditReport, ClassLabel, LabelConfig};
use crate::model::{
    load_params, predict, save_params, train, ModelKind, ModelParams, TrainConfig, TrainingSet,
};
use crate::perturb::{
    perturb_series, FillRange, PerturbationReport, PerturbationSpec, Scenario,
};

fn default_out_dir() -> PathBuf {
    PathBuf::from("runs/out")
}
fn default_history() -> usize {
    10
}
fn default_depth() -> usize {
    10
}
fn default_horizon() -> usize {
    50
}
fn default_alpha() -> f64 {
    0.002
}
fn default_models() -> Vec<ModelKind> {
    vec![ModelKind::Lr, ModelKind::Mlp]
}
fn default_train_fraction() -> f64 {
    0.8
}
fn default_len() -> usize {
    400
}
fn one() -> usize {
    1
}
fn one_u64() -> u64 {
    1
}

/// Data source selection.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataConfig {
    /// FI-2010-style matrices with provided labels and separate
    /// train/test files.
    Fi2010 {
        train_path: PathBuf,
        test_path: PathBuf,
        #[serde(default = "fi2010_default_price_scale")]
        price_scale: u32,
        #[serde(default = "fi2010_default_volume_scale")]
        volume_scale: u32,
        #[serde(default = "fi2010_default_label_rows")]
        label_rows: Vec<usize>,
        #[serde(default)]
        max_columns: Option<usize>,
    },
    /// Generic snapshot CSV, split chronologically; labels computed from
    /// mid-prices.
    SnapshotCsv {
        path: PathBuf,
        tick_size: f64,
        #[serde(default = "default_train_fraction")]
        train_fraction: f64,
    },
    /// Named deterministic fixture series.
    Fixture {
        name: String,
        #[serde(default = "default_len")]
        len: usize,
        #[serde(default = "default_train_fraction")]
        train_fraction: f64,
    },
    /// Synthetic series with the predictive signal in deep-level volumes.
    DeepSignal {
        #[serde(default = "deep_signal_default_len")]
        len: usize,
        #[serde(default = "default_train_fraction")]
        train_fraction: f64,
    },
}

fn fi2010_default_price_scale() -> u32 {
    Fi2010Config::default().price_scale
}
fn fi2010_default_volume_scale() -> u32 {
    Fi2010Config::default().volume_scale
}
fn fi2010_default_label_rows() -> Vec<usize> {
    Fi2010Config::default().label_rows
}
fn deep_signal_default_len() -> usize {
    DeepSignalConfig::default().len
}

/// Perturbation overrides applied to every scenario.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PerturbConfig {
    #[serde(default = "one_u64")]
    pub order_size: u64,
    /// Fixed fill span in ticks beyond the best quote; omitted means
    /// "to the deepest visible level".
    #[serde(default)]
    pub fill_span: Option<u32>,
}

impl PerturbConfig {
    pub fn spec(&self, scenario: Scenario) -> PerturbationSpec {
        let mut spec = PerturbationSpec::new(scenario).with_order_size(self.order_size.max(1));
        if let Some(span) = self.fill_span {
            spec = spec.with_fill_range(FillRange::Span(span));
        }
        spec
    }
}

/// Per-model training sections.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    #[serde(default)]
    pub lr: Option<TrainConfig>,
    #[serde(default)]
    pub mlp: Option<TrainConfig>,
}

/// Full experiment configuration; see the annotated example in the README.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "one_u64")]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// History length T.
    #[serde(default = "default_history")]
    pub history: usize,
    /// Book depth L.
    #[serde(default = "default_depth")]
    pub depth: usize,
    /// Prediction horizon k.
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    /// Micro-movement threshold.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_models")]
    pub models: Vec<ModelKind>,
    pub data: DataConfig,
    #[serde(default)]
    pub perturb: PerturbConfig,
    #[serde(default)]
    pub train: TrainSection,
    /// Keep every n-th training window (1 = all). Recorded in the report.
    #[serde(default = "one")]
    pub train_subsample: usize,
    /// Keep every n-th test window (1 = all). Recorded in the report.
    #[serde(default = "one")]
    pub test_subsample: usize,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.history == 0 || self.depth == 0 || self.horizon == 0 {
            return Err(Error::Config(
                "history, depth and horizon must be at least 1".into(),
            ));
        }
        if !self.alpha.is_finite() || self.alpha <= 0.0 {
            return Err(Error::Config("alpha must be positive".into()));
        }
        if self.models.is_empty() {
            return Err(Error::Config("at least one model must be selected".into()));
        }
        if self.train_subsample == 0 || self.test_subsample == 0 {
            return Err(Error::Config("subsample steps must be at least 1".into()));
        }
        match &self.data {
            DataConfig::Fi2010 {
                train_path,
                test_path,
                label_rows,
                ..
            } => {
                for path in [train_path, test_path] {
                    if !path.exists() {
                        return Err(Error::MissingFile(path.clone()));
                    }
                }
                if !label_rows.contains(&self.horizon) {
                    return Err(Error::UnknownHorizon(self.horizon));
                }
            }
            DataConfig::SnapshotCsv { path, tick_size, train_fraction } => {
                if !path.exists() {
                    return Err(Error::MissingFile(path.clone()));
                }
                TickGrid::from_tick_size(*tick_size)?;
                check_fraction(*train_fraction)?;
            }
            DataConfig::Fixture { name, len, train_fraction } => {
                Fixture::from_name(name, *len)?;
                check_fraction(*train_fraction)?;
            }
            DataConfig::DeepSignal { train_fraction, .. } => check_fraction(*train_fraction)?,
        }
        Ok(())
    }

    pub fn label_config(&self) -> Result<LabelConfig> {
        LabelConfig::new(self.horizon, self.alpha)
    }

    /// Effective training config for one model: the configured (or default)
    /// section with its seed folded into the global seed by stage name.
    pub fn train_config_for(&self, kind: ModelKind) -> TrainConfig {
        let section = match kind {
            ModelKind::Lr => &self.train.lr,
            ModelKind::Mlp => &self.train.mlp,
        };
        let mut config = section.clone().unwrap_or_default();
        config.seed = derive_seed(self.seed, &format!("train-{kind}"), config.seed);
        config
    }
}

fn check_fraction(fraction: f64) -> Result<()> {
    if !(0.0 < fraction && fraction < 1.0) {
        return Err(Error::Config(format!(
            "train fraction must lie strictly between 0 and 1, got {fraction}"
        )));
    }
    Ok(())
}

/// Fold a stage name and extra entropy into the global seed (FNV-1a).
pub fn derive_seed(global: u64, stage: &str, extra: u64) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    let mut mix = |byte: u8| {
        hash ^= byte as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    };
    for byte in stage.bytes() {
        mix(byte);
    }
    for byte in global.to_le_bytes() {
        mix(byte);
    }
    for byte in extra.to_le_bytes() {
        mix(byte);
    }
    hash
}

/// Labels owned by the split, convertible to a [`LabelSource`].
#[derive(Debug, Clone)]
pub enum OwnedLabels {
    Provided(Vec<ClassLabel>),
    Computed(LabelConfig),
}

impl OwnedLabels {
    pub fn as_source(&self) -> LabelSource<'_> {
        match self {
            OwnedLabels::Provided(labels) => LabelSource::Provided(labels),
            OwnedLabels::Computed(config) => LabelSource::Computed(*config),
        }
    }
}

/// Ingested train/test series with their label sources.
#[derive(Debug, Clone)]
pub struct SplitSeries {
    pub train: Vec<LobSnapshot>,
    pub test: Vec<LobSnapshot>,
    pub train_labels: OwnedLabels,
    pub test_labels: OwnedLabels,
    /// Provenance line recorded in report metadata.
    pub source_note: String,
}

fn chronological_split(
    series: Vec<LobSnapshot>,
    fraction: f64,
) -> Result<(Vec<LobSnapshot>, Vec<LobSnapshot>)> {
    let cut = (series.len() as f64 * fraction).floor() as usize;
    if cut == 0 || cut >= series.len() {
        return Err(Error::EmptyInput(format!(
            "chronological split at fraction {fraction} leaves an empty side ({} snapshots)",
            series.len()
        )));
    }
    let mut train = series;
    let test = train.split_off(cut);
    Ok((train, test))
}

/// Load and split the configured data source. The split is never shuffled
/// across time.
pub fn load_split(config: &ExperimentConfig) -> Result<SplitSeries> {
    let label_config = config.label_config()?;
    match &config.data {
        DataConfig::Fi2010 {
            train_path,
            test_path,
            price_scale,
            volume_scale,
            label_rows,
            max_columns,
        } => {
            let fi_config = Fi2010Config {
                price_scale: *price_scale,
                volume_scale: *volume_scale,
                label_rows: label_rows.clone(),
                max_columns: *max_columns,
            };
            let train = load_fi2010(train_path, &fi_config)?;
            let test = load_fi2010(test_path, &fi_config)?;
            let train_labels = train.labels_for_horizon(config.horizon)?.to_vec();
            let test_labels = test.labels_for_horizon(config.horizon)?.to_vec();
            check_depth(config, &train.snapshots)?;
            Ok(SplitSeries {
                train: train.snapshots,
                test: test.snapshots,
                train_labels: OwnedLabels::Provided(train_labels),
                test_labels: OwnedLabels::Provided(test_labels),
                source_note: format!(
                    "fi2010 train={} test={} price_scale={} volume_scale={} label_rows={:?} horizon={}",
                    train_path.display(),
                    test_path.display(),
                    price_scale,
                    volume_scale,
                    label_rows,
                    config.horizon
                ),
            })
        }
        DataConfig::SnapshotCsv {
            path,
            tick_size,
            train_fraction,
        } => {
            let grid = TickGrid::from_tick_size(*tick_size)?;
            let series = parse_snapshot_csv(path, config.depth, grid)?;
            if series.is_empty() {
                return Err(Error::EmptyInput(format!(
                    "snapshot file {} holds no records",
                    path.display()
                )));
            }
            let (train, test) = chronological_split(series, *train_fraction)?;
            Ok(SplitSeries {
                train,
                test,
                train_labels: OwnedLabels::Computed(label_config),
                test_labels: OwnedLabels::Computed(label_config),
                source_note: format!(
                    "snapshot-csv path={} tick_size={} train_fraction={} (chronological split; labels computed, k={}, alpha={})",
                    path.display(),
                    tick_size,
                    train_fraction,
                    config.horizon,
                    config.alpha
                ),
            })
        }
        DataConfig::Fixture {
            name,
            len,
            train_fraction,
        } => {
            let series = synth_fixture(Fixture::from_name(name, *len)?);
            check_depth(config, &series)?;
            let (train, test) = chronological_split(series, *train_fraction)?;
            Ok(SplitSeries {
                train,
                test,
                train_labels: OwnedLabels::Computed(label_config),
                test_labels: OwnedLabels::Computed(label_config),
                source_note: format!(
                    "fixture name={name} len={len} train_fraction={train_fraction} (labels computed, k={}, alpha={})",
                    config.horizon, config.alpha
                ),
            })
        }
        DataConfig::DeepSignal { len, train_fraction } => {
            let deep_config = DeepSignalConfig {
                len: *len,
                seed: derive_seed(config.seed, "data-deep-signal", 0),
                horizon: config.horizon,
                alpha: config.alpha,
                depth: config.depth,
            };
            let series = deep_signal_series(&deep_config)?;
            let (train, test) = chronological_split(series, *train_fraction)?;
            Ok(SplitSeries {
                train,
                test,
                train_labels: OwnedLabels::Computed(label_config),
                test_labels: OwnedLabels::Computed(label_config),
                source_note: format!(
                    "deep-signal len={len} train_fraction={train_fraction} seed={} (labels computed, k={}, alpha={})",
                    deep_config.seed, config.horizon, config.alpha
                ),
            })
        }
    }
}

fn check_depth(config: &ExperimentConfig, series: &[LobSnapshot]) -> Result<()> {
    if let Some(first) = series.first() {
        if first.depth != config.depth {
            return Err(Error::Config(format!(
                "configured depth {} does not match data depth {}",
                config.depth, first.depth
            )));
        }
    }
    Ok(())
}

/// Scenario-level perturbation aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioDiagnostics {
    pub scenario: Scenario,
    pub snapshots: usize,
    pub mean_euclid_shift: f64,
    pub mean_visible_fraction: f64,
    pub mean_injected_volume: f64,
    /// Mean shift per unit of injected volume over snapshots that received
    /// injections; the smoothness diagnostic. None when nothing was
    /// injected anywhere.
    pub mean_shift_per_volume: Option<f64>,
}

pub fn aggregate_diagnostics(
    scenario: Scenario,
    reports: &[PerturbationReport],
) -> ScenarioDiagnostics {
    let n = reports.len().max(1) as f64;
    let mean_euclid_shift = reports.iter().map(|r| r.euclid_shift).sum::<f64>() / n;
    let mean_visible_fraction = reports.iter().map(|r| r.visible_fraction).sum::<f64>() / n;
    let mean_injected_volume =
        reports.iter().map(|r| r.total_injected_volume as f64).sum::<f64>() / n;
    let ratios: Vec<f64> = reports.iter().filter_map(|r| r.shift_per_volume()).collect();
    let mean_shift_per_volume = if ratios.is_empty() {
        None
    } else {
        Some(ratios.iter().sum::<f64>() / ratios.len() as f64)
    };
    ScenarioDiagnostics {
        scenario,
        snapshots: reports.len(),
        mean_euclid_shift,
        mean_visible_fraction,
        mean_injected_volume,
        mean_shift_per_volume,
    }
}

fn diagnostics_table(rows: &[ScenarioDiagnostics]) -> String {
    let mut out = String::from(
        "scenario\tsnapshots\tmean_euclid_shift\tmean_visible_fraction\tmean_injected_volume\tmean_shift_per_volume\n",
    );
    for d in rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            d.scenario,
            d.snapshots,
            d.mean_euclid_shift,
            d.mean_visible_fraction,
            d.mean_injected_volume,
            d.mean_shift_per_volume
                .map(|v| v.to_string())
                .unwrap_or_else(|| "n/a".into()),
        ));
    }
    out
}

fn per_snapshot_table(reports: &[PerturbationReport]) -> String {
    let mut out =
        String::from("index\teuclid_shift\tvisible_fraction\tinjected_volume\tinjected_orders\n");
    for (i, r) in reports.iter().enumerate() {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            i,
            r.euclid_shift,
            r.visible_fraction,
            r.total_injected_volume,
            r.injected.len()
        ));
    }
    out
}

fn stats_to_table(stats: &NormalizationStats) -> String {
    let mut out = String::from("feature\tmean\tstd\tconstant\n");
    for j in 0..stats.feature_dim() {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            j, stats.mean[j], stats.std[j], stats.constant[j] as u8
        ));
    }
    out
}

fn stats_from_table(text: &str) -> Result<NormalizationStats> {
    let mut mean = Vec::new();
    let mut std = Vec::new();
    let mut constant = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                line: i + 1,
                field: fields.len(),
                message: "expected 4 tab-separated fields".into(),
            });
        }
        let bad = |message: &str| Error::Parse {
            line: i + 1,
            field: 0,
            message: message.into(),
        };
        mean.push(fields[1].parse::<f64>().map_err(|_| bad("bad mean"))?);
        std.push(fields[2].parse::<f64>().map_err(|_| bad("bad std"))?);
        constant.push(fields[3] == "1");
    }
    if mean.is_empty() {
        return Err(Error::EmptyInput("empty statistics file".into()));
    }
    Ok(NormalizationStats { mean, std, constant })
}

fn write_text(dir: &Path, name: &str, content: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, content)?;
    Ok(path)
}

fn params_file(kind: ModelKind) -> String {
    format!("params_{kind}.txt")
}

/// Everything a finished run produced.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub reports: Vec<EvalReport>,
    pub diagnostics: Vec<ScenarioDiagnostics>,
    pub out_dir: PathBuf,
}

struct PreparedData {
    split: SplitSeries,
    train_set: LabeledDataset,
    test_set: LabeledDataset,
    stats: NormalizationStats,
    meta_lines: Vec<String>,
}

fn prepare(config: &ExperimentConfig) -> Result<PreparedData> {
    let split = load_split(config).map_err(|e| e.in_stage("ingest"))?;

    let build = || -> Result<(LabeledDataset, LabeledDataset)> {
        let train_set = build_dataset(&split.train, split.train_labels.as_source(), config.history)?
            .subsample(config.train_subsample)?;
        let test_set = build_dataset(&split.test, split.test_labels.as_source(), config.history)?
            .subsample(config.test_subsample)?;
        Ok((train_set, test_set))
    };
    let (train_set, test_set) = build().map_err(|e| e.in_stage("dataset"))?;

    let stats =
        fit_normalization(&train_set.windows).map_err(|e| e.in_stage("normalization"))?;

    let train_dist = train_set.class_distribution();
    let test_dist = test_set.class_distribution();
    let meta_lines = vec![
        format!("source: {}", split.source_note),
        format!(
            "dimensions: history={} depth={} horizon={} alpha={}",
            config.history, config.depth, config.horizon, config.alpha
        ),
        format!("seed: {}", config.seed),
        format!(
            "train windows: {} (subsample step {}); class mix up/stationary/down = {}/{}/{}",
            train_set.len(),
            config.train_subsample,
            train_dist[0],
            train_dist[1],
            train_dist[2]
        ),
        format!(
            "test windows: {} (subsample step {}); class mix up/stationary/down = {}/{}/{}",
            test_set.len(),
            config.test_subsample,
            test_dist[0],
            test_dist[1],
            test_dist[2]
        ),
        format!(
            "normalization: per-feature z-score, statistics fit on the {} training windows only",
            train_set.len()
        ),
        format!(
            "perturbation: order_size={} fill_range={}",
            config.perturb.order_size.max(1),
            config
                .perturb
                .fill_span
                .map(|s| format!("span {s} ticks beyond best"))
                .unwrap_or_else(|| "to deepest visible level".into())
        ),
    ];
    Ok(PreparedData {
        split,
        train_set,
        test_set,
        stats,
        meta_lines,
    })
}

fn train_models(
    config: &ExperimentConfig,
    prepared: &PreparedData,
    models: &[ModelKind],
) -> Result<Vec<(ModelKind, ModelParams, Vec<f64>)>> {
    let training_set = TrainingSet::from_windows(
        &prepared.train_set.windows,
        &prepared.train_set.labels,
        &prepared.stats,
    )
    .map_err(|e| e.in_stage("train"))?;

    let mut trained = Vec::with_capacity(models.len());
    for &kind in models {
        let train_config = config.train_config_for(kind);
        let model = train(&training_set, kind, &train_config).map_err(|e| e.in_stage("train"))?;
        trained.push((kind, model.params, model.loss_trace));
    }
    Ok(trained)
}

fn write_training_artifacts(
    config: &ExperimentConfig,
    prepared: &PreparedData,
    trained: &[(ModelKind, ModelParams, Vec<f64>)],
) -> Result<()> {
    let dir = &config.out_dir;
    std::fs::create_dir_all(dir)?;
    write_text(dir, "stats.tsv", &stats_to_table(&prepared.stats))?;
    for (kind, params, trace) in trained {
        save_params(dir.join(params_file(*kind)), params)?;
        let mut table = String::from("epoch\tloss\n");
        for (epoch, loss) in trace.iter().enumerate() {
            table.push_str(&format!("{epoch}\t{loss}\n"));
        }
        write_text(dir, &format!("train_trace_{kind}.tsv"), &table)?;
    }
    Ok(())
}

fn evaluate_models(
    config: &ExperimentConfig,
    prepared: &PreparedData,
    models: &[(ModelKind, ModelParams)],
    scenarios: &[Scenario],
) -> Result<(Vec<EvalReport>, Vec<ScenarioDiagnostics>)> {
    let mut reports = Vec::new();
    let mut diagnostics = Vec::new();
    for &scenario in scenarios {
        let spec = config.perturb.spec(scenario);
        let (perturbed, perturbation_reports) =
            perturb_series(&prepared.split.test, &spec).map_err(|e| e.in_stage("perturb"))?;
        diagnostics.push(aggregate_diagnostics(scenario, &perturbation_reports));

        let scenario_set =
            rewindow(&prepared.test_set, &perturbed).map_err(|e| e.in_stage("evaluate"))?;
        for (kind, params) in models {
            let mut preds = Vec::with_capacity(scenario_set.len());
            for window in &scenario_set.windows {
                preds.push(
                    predict(params, window, &prepared.stats).map_err(|e| e.in_stage("evaluate"))?,
                );
            }
            let matrix = confusion(&preds, &scenario_set.labels)
                .map_err(|e| e.in_stage("evaluate"))?;
            reports.push(
                EvalReport::new(kind.name(), scenario, matrix)
                    .map_err(|e| e.in_stage("evaluate"))?,
            );
        }
    }
    Ok((reports, diagnostics))
}

fn write_evaluation_artifacts(
    config: &ExperimentConfig,
    prepared: &PreparedData,
    reports: &[EvalReport],
    diagnostics: &[ScenarioDiagnostics],
) -> Result<()> {
    let dir = &config.out_dir;
    write_text(dir, "report.tsv", &render_machine_report(reports)?)?;
    for report in reports {
        write_text(
            dir,
            &format!("confusion_{}_{}.tsv", report.model, report.scenario),
            &report.matrix.to_table(),
        )?;
    }
    write_text(dir, "diagnostics.tsv", &diagnostics_table(diagnostics))?;

    let mut human = String::new();
    human.push_str(&render_table(reports)?);
    human.push('\n');
    human.push_str("perturbation diagnostics (test split):\n");
    human.push_str(&diagnostics_table(diagnostics));
    let flagged: Vec<&EvalReport> =
        reports.iter().filter(|r| !r.metrics.flags.is_empty()).collect();
    if !flagged.is_empty() {
        human.push_str("\nflags:\n");
        for report in flagged {
            for flag in &report.metrics.flags {
                human.push_str(&format!("  {}/{}: {}\n", report.model, report.scenario, flag));
            }
        }
    }
    human.push_str("\nmetric conventions: accuracy is unbalanced; precision/recall are macro averages; f-score is the unweighted mean of per-class F1 (whether the reference numbers used macro-F1 or F of macro averages is not determinable, so the convention is pinned here).\n");
    write_text(dir, "report.txt", &human)?;
    write_text(dir, "meta.txt", &(prepared.meta_lines.join("\n") + "\n"))?;
    Ok(())
}

/// Train on unperturbed data, evaluate all four scenarios, write the
/// per-model report table, per-scenario confusion matrices and
/// perturbation diagnostics.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let prepared = prepare(config)?;
    let trained = train_models(config, &prepared, &config.models)?;
    write_training_artifacts(config, &prepared, &trained).map_err(|e| e.in_stage("write"))?;

    // Reload from disk so every scenario provably evaluates the same
    // parameters file that was just written.
    let mut models = Vec::with_capacity(trained.len());
    for (kind, _, _) in &trained {
        let params = load_params(config.out_dir.join(params_file(*kind)))
            .map_err(|e| e.in_stage("evaluate"))?;
        models.push((*kind, params));
    }

    let (reports, diagnostics) = evaluate_models(config, &prepared, &models, &Scenario::ALL)?;
    write_evaluation_artifacts(config, &prepared, &reports, &diagnostics)
        .map_err(|e| e.in_stage("write"))?;
    Ok(ExperimentOutcome {
        reports,
        diagnostics,
        out_dir: config.out_dir.clone(),
    })
}

/// Train only: fit statistics, train the selected models, write parameter,
/// statistics and loss-trace files.
pub fn run_train(config: &ExperimentConfig, models: &[ModelKind]) -> Result<PathBuf> {
    config.validate()?;
    let prepared = prepare(config)?;
    let trained = train_models(config, &prepared, models)?;
    write_training_artifacts(config, &prepared, &trained).map_err(|e| e.in_stage("write"))?;
    write_text(
        &config.out_dir,
        "meta.txt",
        &(prepared.meta_lines.join("\n") + "\n"),
    )
    .map_err(|e| e.in_stage("write"))?;
    Ok(config.out_dir.clone())
}

/// Evaluate previously trained parameters (from `run_train`) under the
/// selected scenarios.
pub fn run_evaluate(
    config: &ExperimentConfig,
    models: &[ModelKind],
    scenarios: &[Scenario],
) -> Result<ExperimentOutcome> {
    config.validate()?;
    let prepared = prepare(config)?;
    let stats_path = config.out_dir.join("stats.tsv");
    if !stats_path.exists() {
        return Err(Error::MissingFile(stats_path).in_stage("evaluate"));
    }
    let stats = stats_from_table(&std::fs::read_to_string(&stats_path)?)
        .map_err(|e| e.in_stage("evaluate"))?;
    let prepared = PreparedData { stats, ..prepared };

    let mut loaded = Vec::with_capacity(models.len());
    for &kind in models {
        let params = load_params(config.out_dir.join(params_file(kind)))
            .map_err(|e| e.in_stage("evaluate"))?;
        loaded.push((kind, params));
    }
    let (reports, diagnostics) = evaluate_models(config, &prepared, &loaded, scenarios)?;
    write_evaluation_artifacts(config, &prepared, &reports, &diagnostics)
        .map_err(|e| e.in_stage("write"))?;
    Ok(ExperimentOutcome {
        reports,
        diagnostics,
        out_dir: config.out_dir.clone(),
    })
}

/// The unsplit series a data source describes: the test file for FI-2010
/// sources (that is what gets perturbed in the experiment), the full
/// series otherwise. Used by diagnostics, which involve no models and
/// need no train/test separation.
pub fn load_full_series(config: &ExperimentConfig) -> Result<Vec<LobSnapshot>> {
    match &config.data {
        DataConfig::Fi2010 {
            test_path,
            price_scale,
            volume_scale,
            label_rows,
            max_columns,
            ..
        } => {
            let fi_config = Fi2010Config {
                price_scale: *price_scale,
                volume_scale: *volume_scale,
                label_rows: label_rows.clone(),
                max_columns: *max_columns,
            };
            Ok(load_fi2010(test_path, &fi_config)?.snapshots)
        }
        DataConfig::SnapshotCsv { path, tick_size, .. } => {
            let grid = TickGrid::from_tick_size(*tick_size)?;
            parse_snapshot_csv(path, config.depth, grid)
        }
        DataConfig::Fixture { name, len, .. } => {
            Ok(synth_fixture(Fixture::from_name(name, *len)?))
        }
        DataConfig::DeepSignal { len, .. } => deep_signal_series(&DeepSignalConfig {
            len: *len,
            seed: derive_seed(config.seed, "data-deep-signal", 0),
            horizon: config.horizon,
            alpha: config.alpha,
            depth: config.depth,
        }),
    }
}

/// Perturbation diagnostics only; no models involved.
pub fn run_diagnostics(
    config: &ExperimentConfig,
    scenarios: &[Scenario],
) -> Result<Vec<ScenarioDiagnostics>> {
    config.validate()?;
    let series = load_full_series(config).map_err(|e| e.in_stage("ingest"))?;

    let mut aggregates = Vec::with_capacity(scenarios.len());
    for &scenario in scenarios {
        let spec = config.perturb.spec(scenario);
        let (_, reports) =
            perturb_series(&series, &spec).map_err(|e| e.in_stage("perturb"))?;
        write_text(
            &config.out_dir,
            &format!("diagnostics_{scenario}.tsv"),
            &per_snapshot_table(&reports),
        )
        .map_err(|e| e.in_stage("write"))?;
        aggregates.push(aggregate_diagnostics(scenario, &reports));
    }
    write_text(
        &config.out_dir,
        "diagnostics.tsv",
        &diagnostics_table(&aggregates),
    )
    .map_err(|e| e.in_stage("write"))?;
    Ok(aggregates)
}

/// Compare computed labels against the provided label rows of an FI-2010
/// test file; agreement is reported, never asserted.
pub fn run_label_audit(config: &ExperimentConfig) -> Result<AuditReport> {
    config.validate()?;
    let DataConfig::Fi2010 {
        test_path,
        price_scale,
        volume_scale,
        label_rows,
        max_columns,
        ..
    } = &config.data
    else {
        return Err(Error::Config(
            "label audit requires an fi2010 data source with label rows".into(),
        ));
    };
    let fi_config = Fi2010Config {
        price_scale: *price_scale,
        volume_scale: *volume_scale,
        label_rows: label_rows.clone(),
        max_columns: *max_columns,
    };
    let data = load_fi2010(test_path, &fi_config).map_err(|e| e.in_stage("ingest"))?;
    let provided = data.labels_for_horizon(config.horizon)?;
    let mids = crate::book::mid_series(&data.snapshots).map_err(|e| e.in_stage("ingest"))?;
    let report = audit_labels(&mids, provided, &config.label_config()?)
        .map_err(|e| e.in_stage("label-audit"))?;

    write_text(&config.out_dir, "label_audit.tsv", &report.to_table())
        .map_err(|e| e.in_stage("write"))?;
    write_text(&config.out_dir, "label_audit_summary.txt", &report.summary())
        .map_err(|e| e.in_stage("write"))?;
    Ok(report)
}

/// Parse and summarize the configured data source without training.
pub fn run_ingest_summary(config: &ExperimentConfig) -> Result<String> {
    config.validate()?;
    let prepared = prepare(config)?;
    let mut out = prepared.meta_lines.join("\n");
    out.push('\n');
    write_text(&config.out_dir, "ingest_summary.txt", &out).map_err(|e| e.in_stage("write"))?;
    Ok(out)
}
