//! Experiment execution: dataset preparation, single trials, and the
//! search-then-final protocol for one experiment cell.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::persist::{Phase, ResultRecord, TimingRecord, SCHEMA_VERSION};
use super::report::{build_report, Report};
use super::space::{Param, SearchSpace};
use super::BenchError;
use crate::data::{
    augment, load_csv, preprocess, AugmentKind, Dataset, PreprocessSpec, Split, Targets,
    DEFAULT_FEATURE_CAP,
};
use crate::nn::{self, MlpSpec, TrainConfig};
use crate::seeds;
use crate::selectors::{
    adaptive_group_lasso_fit, deep_lasso_fit, first_layer_lasso_fit, lasso_fit, select_top_k,
    univariate_scores, FeatureScores, LassoOptions, PenaltyConfig,
};
use crate::stats::downstream_metric;
use crate::trees::{fit_forest, fit_gbdt, ForestConfig, GbdtConfig};

/// Feature-selection method of a cell. `None` is the no-selection
/// baseline: the downstream model sees every column.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FsMethod {
    None,
    Univariate,
    Lasso,
    FirstLayerLasso,
    AdaptiveGroupLasso,
    DeepLasso,
    RandomForest,
    Gbdt,
}

impl FsMethod {
    pub fn label(&self) -> &'static str {
        match self {
            FsMethod::None => "none",
            FsMethod::Univariate => "univariate",
            FsMethod::Lasso => "lasso",
            FsMethod::FirstLayerLasso => "first_layer_lasso",
            FsMethod::AdaptiveGroupLasso => "adaptive_group_lasso",
            FsMethod::DeepLasso => "deep_lasso",
            FsMethod::RandomForest => "random_forest",
            FsMethod::Gbdt => "gbdt",
        }
    }

    pub fn pretty(&self) -> &'static str {
        match self {
            FsMethod::None => "No FS",
            FsMethod::Univariate => "Univariate",
            FsMethod::Lasso => "Lasso",
            FsMethod::FirstLayerLasso => "First-Layer Lasso",
            FsMethod::AdaptiveGroupLasso => "Adaptive Group Lasso",
            FsMethod::DeepLasso => "Deep Lasso",
            FsMethod::RandomForest => "Random Forest",
            FsMethod::Gbdt => "GBDT",
        }
    }

    /// Whether selection trains an auxiliary MLP and therefore needs
    /// the MLP hyperparameters in the search space.
    pub fn is_neural(&self) -> bool {
        matches!(
            self,
            FsMethod::FirstLayerLasso | FsMethod::AdaptiveGroupLasso | FsMethod::DeepLasso
        )
    }
}

/// Downstream model retrained on the selected columns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DownstreamKind {
    Mlp,
    Gbdt,
}

impl DownstreamKind {
    pub fn label(&self) -> &'static str {
        match self {
            DownstreamKind::Mlp => "mlp",
            DownstreamKind::Gbdt => "gbdt",
        }
    }

    pub fn pretty(&self) -> &'static str {
        match self {
            DownstreamKind::Mlp => "MLP",
            DownstreamKind::Gbdt => "GBDT",
        }
    }
}

/// Extraneous-feature setup applied before preprocessing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentSpec {
    pub kind: AugmentKind,
    /// Target extraneous share of the augmented dataset.
    pub fraction: f64,
}

/// One cell of the benchmark grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    /// Key into the dataset map handed to [`run_benchmark`].
    pub dataset: String,
    pub augment: Option<AugmentSpec>,
    pub fs_method: FsMethod,
    pub downstream: DownstreamKind,
    /// Random-search budget.
    pub n_trials: usize,
    /// Re-runs of the best trial; at least 2 so ranks can be tested.
    pub n_seeds: usize,
    pub master_seed: u64,
    /// Epoch, patience, batch, and decay schedule template. Learning
    /// rate, weight decay, and seed are replaced per run.
    pub train: TrainConfig,
    /// Cap on dataset rows, subsampled before splitting.
    pub sample_cap: Option<usize>,
    /// Replaces the built-in search space when set.
    pub search: Option<SearchSpace>,
}

impl ExperimentConfig {
    pub fn new(
        name: impl Into<String>,
        dataset: impl Into<String>,
        fs_method: FsMethod,
        downstream: DownstreamKind,
        master_seed: u64,
    ) -> ExperimentConfig {
        ExperimentConfig {
            name: name.into(),
            dataset: dataset.into(),
            augment: None,
            fs_method,
            downstream,
            n_trials: 20,
            n_seeds: 10,
            master_seed,
            train: TrainConfig::default(),
            sample_cap: None,
            search: None,
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.name.is_empty() {
            return Err(BenchError::BadConfig("empty experiment name".into()));
        }
        if let Some(a) = &self.augment {
            if !(a.fraction > 0.0 && a.fraction < 1.0) {
                return Err(BenchError::BadConfig(format!(
                    "extraneous fraction {} outside (0, 1)",
                    a.fraction
                )));
            }
        }
        if self.n_trials < 1 {
            return Err(BenchError::BadConfig("n_trials must be at least 1".into()));
        }
        if self.n_seeds < 2 {
            return Err(BenchError::BadConfig(
                "n_seeds must be at least 2 for rank statistics".into(),
            ));
        }
        if let Some(cap) = self.sample_cap {
            if cap < 20 {
                return Err(BenchError::BadConfig(format!(
                    "sample_cap {cap} leaves too few rows to split"
                )));
            }
        }
        Ok(())
    }

    /// Stable digest of the full config, used as the dedup key in
    /// result logs.
    pub fn hash(&self) -> Result<String, BenchError> {
        let json = serde_json::to_string(self)?;
        Ok(format!("{:x}", Sha256::digest(json.as_bytes())))
    }

    /// Augmentation label like "random-0.5", or "none".
    pub fn setup_label(&self) -> String {
        match &self.augment {
            Some(a) => format!("{}-{}", a.kind.label(), a.fraction),
            None => "none".into(),
        }
    }

    /// Row label shared by all cells with this method pairing.
    pub fn method_label(&self) -> String {
        format!("{}+{}", self.fs_method.label(), self.downstream.label())
    }

    /// The space actually searched: the override when present, else
    /// the published downstream space plus the method's extras.
    pub fn search_space(&self) -> Result<SearchSpace, BenchError> {
        match &self.search {
            Some(s) => Ok(s.clone()),
            None => combined_space(self.fs_method, self.downstream),
        }
    }
}

/// Published downstream space plus the selection method's own
/// hyperparameters, under `fs_`-prefixed names where they could
/// collide. Neural methods reuse the downstream MLP architecture, so
/// those keys are added only when the downstream is not an MLP.
pub(crate) fn combined_space(
    fs: FsMethod,
    downstream: DownstreamKind,
) -> Result<SearchSpace, BenchError> {
    let mut space = match downstream {
        DownstreamKind::Mlp => SearchSpace::mlp(),
        DownstreamKind::Gbdt => SearchSpace::gbdt(),
    };
    match fs {
        FsMethod::None | FsMethod::Univariate => {}
        FsMethod::Lasso | FsMethod::AdaptiveGroupLasso => {
            space.push("fs_penalty_weight", Param::Uniform { lo: 1e-3, hi: 5e-1 })?;
        }
        FsMethod::FirstLayerLasso | FsMethod::DeepLasso => {
            space.push(
                "fs_penalty_weight",
                Param::LogUniform { lo: 1e-2, hi: 5e-1 },
            )?;
        }
        FsMethod::RandomForest => space.merge(&SearchSpace::random_forest_fs())?,
        FsMethod::Gbdt => space.merge(&SearchSpace::gbdt_with_prefix("fs_"))?,
    }
    if fs.is_neural() && downstream != DownstreamKind::Mlp {
        space.merge(&SearchSpace::mlp())?;
    }
    Ok(space)
}

/// A dataset after capping, splitting, augmentation, and
/// preprocessing, with per-split matrices materialized once.
pub struct Prepared {
    pub ds: Dataset,
    pub x_train: Array2<f64>,
    pub x_val: Array2<f64>,
    pub x_test: Array2<f64>,
    pub y_train: Targets,
    pub y_val: Targets,
    pub y_test: Targets,
}

impl Prepared {
    /// Runs the deterministic preparation pipeline for `config`:
    /// subsample rows to the cap, assign the split, append extraneous
    /// columns, then fit and apply preprocessing on the train split.
    pub fn build(config: &ExperimentConfig, source: &Dataset) -> Result<Prepared, BenchError> {
        config.validate()?;
        let mut ds = source.clone();
        if let Some(cap) = config.sample_cap {
            cap_rows(
                &mut ds,
                cap,
                seeds::stream_seed(config.master_seed, "row-cap", &[]),
            );
        }
        ds.assign_split(seeds::stream_seed(config.master_seed, "split", &[]))?;
        if let Some(a) = &config.augment {
            augment(
                &mut ds,
                a.kind,
                a.fraction,
                seeds::stream_seed(config.master_seed, "augment", &[]),
                DEFAULT_FEATURE_CAP,
            )?;
        }
        preprocess(&mut ds, &PreprocessSpec::default())?;
        let rows_train = ds.rows_in(Split::Train)?;
        let rows_val = ds.rows_in(Split::Val)?;
        let rows_test = ds.rows_in(Split::Test)?;
        Ok(Prepared {
            x_train: ds.x_rows(&rows_train, None),
            x_val: ds.x_rows(&rows_val, None),
            x_test: ds.x_rows(&rows_test, None),
            y_train: ds.y_rows(&rows_train),
            y_val: ds.y_rows(&rows_val),
            y_test: ds.y_rows(&rows_test),
            ds,
        })
    }
}

/// Keeps a seeded subset of rows, preserving dataset order. Any
/// previous split assignment is dropped because row indices change.
fn cap_rows(ds: &mut Dataset, cap: usize, seed: u64) {
    let n = ds.n();
    if cap >= n {
        return;
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = seeds::stream_rng(seed, "row-sample", &[]);
    for i in 0..cap {
        let j = rand::Rng::random_range(&mut rng, i..n);
        idx.swap(i, j);
    }
    let mut keep = idx[..cap].to_vec();
    keep.sort_unstable();
    let x = ds.x_rows(&keep, None);
    let y = ds.y.subset(&keep);
    ds.x = x;
    ds.y = y;
    ds.split = None;
    ds.split_seed = None;
}

fn need(params: &BTreeMap<String, f64>, key: &str) -> Result<f64, BenchError> {
    params
        .get(key)
        .copied()
        .ok_or_else(|| BenchError::MissingParam(key.into()))
}

fn need_usize(params: &BTreeMap<String, f64>, key: &str) -> Result<usize, BenchError> {
    let v = need(params, key)?;
    if v.fract() != 0.0 || v < 0.0 || v > usize::MAX as f64 {
        return Err(BenchError::BadConfig(format!(
            "{key}={v} is not a nonnegative integer"
        )));
    }
    Ok(v as usize)
}

fn mlp_spec_from(
    params: &BTreeMap<String, f64>,
    in_dim: usize,
    out_dim: usize,
) -> Result<MlpSpec, BenchError> {
    Ok(MlpSpec {
        n_layers: need_usize(params, "n_layers")?,
        layer_size: need_usize(params, "layer_size")?,
        dropout: need(params, "dropout")?,
        in_dim,
        out_dim,
    })
}

fn train_config_from(
    template: &TrainConfig,
    params: &BTreeMap<String, f64>,
    seed: u64,
) -> Result<TrainConfig, BenchError> {
    let mut cfg = template.clone();
    cfg.lr = need(params, "lr")?;
    cfg.weight_decay = need(params, "weight_decay")?;
    cfg.seed = seed;
    Ok(cfg)
}

fn gbdt_config_from(
    params: &BTreeMap<String, f64>,
    prefix: &str,
) -> Result<GbdtConfig, BenchError> {
    let key = |k: &str| format!("{prefix}{k}");
    Ok(GbdtConfig {
        max_depth: need_usize(params, &key("max_depth"))?,
        min_child_weight: need(params, &key("min_child_weight"))?,
        subsample: need(params, &key("subsample"))?,
        learning_rate: need(params, &key("learning_rate"))?,
        colsample_bytree: need(params, &key("colsample_bytree"))?,
        gamma: need(params, &key("gamma"))?,
        lambda: need(params, &key("lambda"))?,
        ..GbdtConfig::default()
    })
}

struct TrialOutput {
    selected: Vec<usize>,
    scores: Option<FeatureScores>,
    val_metric: f64,
    test_metric: Option<f64>,
}

/// The trial pipeline: selection, top-k, downstream retrain, metrics.
/// Test evaluation happens only when `evaluate_test` is set, which
/// callers restrict to final runs of already-chosen hyperparameters.
fn try_trial(
    prepared: &Prepared,
    config: &ExperimentConfig,
    params: &BTreeMap<String, f64>,
    run_seed: u64,
    evaluate_test: bool,
    timing: &mut TimingRecord,
) -> Result<TrialOutput, BenchError> {
    let ds = &prepared.ds;
    let task = ds.task;
    let k = ds.n_original();
    let fs_seed = seeds::stream_seed(run_seed, "feature-scores", &[]);

    let fs_clock = Instant::now();
    let scores = match config.fs_method {
        FsMethod::None => None,
        FsMethod::Univariate => Some(univariate_scores(
            prepared.x_train.view(),
            &prepared.y_train,
        )?),
        FsMethod::Lasso => {
            let weight = need(params, "fs_penalty_weight")?;
            let alpha = PenaltyConfig::from_penalty_weight(weight)?.alpha;
            Some(lasso_fit(
                prepared.x_train.view(),
                &prepared.y_train,
                alpha,
                &LassoOptions::default(),
                fs_seed,
            )?)
        }
        FsMethod::FirstLayerLasso | FsMethod::AdaptiveGroupLasso | FsMethod::DeepLasso => {
            let weight = need(params, "fs_penalty_weight")?;
            let pcfg = PenaltyConfig::from_penalty_weight(weight)?;
            let spec = mlp_spec_from(params, ds.m_total(), task.out_dim())?;
            let cfg = train_config_from(&config.train, params, fs_seed)?;
            let fit = match config.fs_method {
                FsMethod::FirstLayerLasso => first_layer_lasso_fit,
                FsMethod::AdaptiveGroupLasso => adaptive_group_lasso_fit,
                _ => deep_lasso_fit,
            };
            let (_, s) = fit(
                &spec,
                prepared.x_train.view(),
                &prepared.y_train,
                prepared.x_val.view(),
                &prepared.y_val,
                &cfg,
                &pcfg,
            )?;
            Some(s)
        }
        FsMethod::RandomForest => {
            let cfg = ForestConfig {
                n_estimators: need_usize(params, "fs_n_estimators")?,
                max_depth: need_usize(params, "fs_max_depth")?,
                ..ForestConfig::default()
            };
            let (_, s) = fit_forest(prepared.x_train.view(), &prepared.y_train, &cfg, fs_seed)?;
            Some(s)
        }
        FsMethod::Gbdt => {
            let cfg = gbdt_config_from(params, "fs_")?;
            let (_, s) = fit_gbdt(
                prepared.x_train.view(),
                &prepared.y_train,
                &cfg,
                fs_seed,
                prepared.x_val.view(),
                &prepared.y_val,
            )?;
            Some(s)
        }
    };
    timing.fs_seconds = fs_clock.elapsed().as_secs_f64();

    let selected = match &scores {
        Some(s) => select_top_k(s, k)?,
        None => (0..ds.m_total()).collect(),
    };

    let train_clock = Instant::now();
    let x_train = prepared.x_train.select(Axis(1), &selected);
    let x_val = prepared.x_val.select(Axis(1), &selected);
    let downstream_seed = seeds::stream_seed(run_seed, "downstream", &[]);
    let (val_metric, test_metric) = match config.downstream {
        DownstreamKind::Mlp => {
            let spec = mlp_spec_from(params, selected.len(), task.out_dim())?;
            let cfg = train_config_from(&config.train, params, downstream_seed)?;
            let trained = nn::fit(
                &spec,
                x_train.view(),
                &prepared.y_train,
                x_val.view(),
                &prepared.y_val,
                &cfg,
                None,
            )?;
            let val_pred = nn::predict_targets(&trained.model, x_val.view(), task)?;
            let val = downstream_metric(&val_pred, &prepared.y_val)?;
            let test = if evaluate_test {
                let x_test = prepared.x_test.select(Axis(1), &selected);
                let pred = nn::predict_targets(&trained.model, x_test.view(), task)?;
                Some(downstream_metric(&pred, &prepared.y_test)?)
            } else {
                None
            };
            (val, test)
        }
        DownstreamKind::Gbdt => {
            let cfg = gbdt_config_from(params, "")?;
            let (model, _) = fit_gbdt(
                x_train.view(),
                &prepared.y_train,
                &cfg,
                downstream_seed,
                x_val.view(),
                &prepared.y_val,
            )?;
            let val_pred = model.predict(x_val.view())?;
            let val = downstream_metric(&val_pred, &prepared.y_val)?;
            let test = if evaluate_test {
                let x_test = prepared.x_test.select(Axis(1), &selected);
                let pred = model.predict(x_test.view())?;
                Some(downstream_metric(&pred, &prepared.y_test)?)
            } else {
                None
            };
            (val, test)
        }
    };
    timing.train_seconds = train_clock.elapsed().as_secs_f64();

    Ok(TrialOutput {
        selected,
        scores,
        val_metric,
        test_metric,
    })
}

/// Runs one trial and folds any pipeline error into the record, so a
/// bad hyperparameter draw cannot abort the grid.
pub(crate) fn run_trial(
    prepared: &Prepared,
    config: &ExperimentConfig,
    config_hash: &str,
    phase: Phase,
    params: &BTreeMap<String, f64>,
    run_seed: u64,
    evaluate_test: bool,
) -> (ResultRecord, TimingRecord) {
    let mut timing = TimingRecord {
        config_hash: config_hash.into(),
        phase,
        fs_seconds: 0.0,
        train_seconds: 0.0,
    };
    let mut record = ResultRecord {
        schema_version: SCHEMA_VERSION,
        config_hash: config_hash.into(),
        config_name: config.name.clone(),
        dataset: config.dataset.clone(),
        setup: config.setup_label(),
        fs_method: config.fs_method,
        downstream: config.downstream,
        phase,
        seed: run_seed,
        hyperparams: params.clone(),
        selected: Vec::new(),
        n_original: prepared.ds.n_original(),
        m_total: prepared.ds.m_total(),
        val_metric: None,
        test_metric: None,
        scores: None,
        error: None,
    };
    match try_trial(
        prepared,
        config,
        params,
        run_seed,
        evaluate_test,
        &mut timing,
    ) {
        Ok(output) => {
            record.selected = output.selected;
            record.val_metric = Some(output.val_metric);
            record.test_metric = output.test_metric;
            // Importances are logged for final runs only; search
            // records would bloat the log without feeding any report.
            if evaluate_test {
                record.scores = output.scores.map(|s| s.scores);
            }
        }
        Err(e) => {
            log::warn!("{} {:?}: trial failed: {e}", config.name, phase);
            record.error = Some(e.to_string());
        }
    }
    (record, timing)
}

/// Outcome of one experiment cell.
pub struct CellResult {
    pub config_hash: String,
    pub records: Vec<ResultRecord>,
    pub timings: Vec<TimingRecord>,
    /// Index of the best search trial by validation metric, if any
    /// trial succeeded.
    pub best_trial: Option<usize>,
    /// Test metrics of the successful final runs.
    pub final_test: Vec<f64>,
    /// Whether every final run succeeded; only complete cells enter
    /// rank tables.
    pub complete: bool,
}

/// Runs one cell: `n_trials` random-search trials scored on
/// validation data, then the best trial's hyperparameters re-run
/// across `n_seeds` seeds with test evaluation.
pub fn run_experiment(
    config: &ExperimentConfig,
    dataset: &Dataset,
) -> Result<CellResult, BenchError> {
    config.validate()?;
    let config_hash = config.hash()?;
    let space = config.search_space()?;
    let prepared = Prepared::build(config, dataset)?;
    let master = config.master_seed;

    let search: Vec<(ResultRecord, TimingRecord)> = (0..config.n_trials)
        .into_par_iter()
        .map(|trial| {
            let params = space.sample(&mut seeds::stream_rng(
                master,
                "trial-params",
                &[trial as u64],
            ));
            run_trial(
                &prepared,
                config,
                &config_hash,
                Phase::Search { trial },
                &params,
                seeds::stream_seed(master, "trial-run", &[trial as u64]),
                false,
            )
        })
        .collect();

    let mut best_trial: Option<usize> = None;
    let mut best_val = f64::NEG_INFINITY;
    for (trial, (record, _)) in search.iter().enumerate() {
        if let Some(val) = record.val_metric {
            if val > best_val {
                best_val = val;
                best_trial = Some(trial);
            }
        }
    }

    let mut records = Vec::with_capacity(config.n_trials + config.n_seeds);
    let mut timings = Vec::with_capacity(config.n_trials + config.n_seeds);
    let best_params = best_trial.map(|t| search[t].0.hyperparams.clone());
    for (record, timing) in search {
        records.push(record);
        timings.push(timing);
    }

    let mut final_test = Vec::new();
    let mut complete = false;
    match best_params {
        Some(params) => {
            let finals: Vec<(ResultRecord, TimingRecord)> = (0..config.n_seeds)
                .into_par_iter()
                .map(|seed_index| {
                    run_trial(
                        &prepared,
                        config,
                        &config_hash,
                        Phase::Final { seed_index },
                        &params,
                        seeds::stream_seed(master, "final-run", &[seed_index as u64]),
                        true,
                    )
                })
                .collect();
            complete = finals.iter().all(|(r, _)| r.test_metric.is_some());
            for (record, timing) in finals {
                final_test.extend(record.test_metric);
                records.push(record);
                timings.push(timing);
            }
            if !complete {
                log::warn!(
                    "{}: some final runs failed; cell excluded from ranks",
                    config.name
                );
            }
        }
        None => log::warn!(
            "{}: all {} search trials failed; cell reported as missing",
            config.name,
            config.n_trials
        ),
    }

    Ok(CellResult {
        config_hash,
        records,
        timings,
        best_trial,
        final_test,
        complete,
    })
}

/// Everything a benchmark run produces in memory.
pub struct BenchOutcome {
    pub records: Vec<ResultRecord>,
    pub timings: Vec<TimingRecord>,
    pub report: Report,
}

/// Runs every cell of a suite against its dataset and aggregates the
/// records into a report.
pub fn run_benchmark(
    configs: &[ExperimentConfig],
    datasets: &BTreeMap<String, Dataset>,
) -> Result<BenchOutcome, BenchError> {
    if configs.is_empty() {
        return Err(BenchError::BadConfig("empty suite".into()));
    }
    let mut records = Vec::new();
    let mut timings = Vec::new();
    for config in configs {
        let dataset = datasets
            .get(&config.dataset)
            .ok_or_else(|| BenchError::MissingDataset(config.dataset.clone()))?;
        let cell = run_experiment(config, dataset)?;
        records.extend(cell.records);
        timings.extend(cell.timings);
    }
    let report = build_report(&records)?;
    Ok(BenchOutcome {
        records,
        timings,
        report,
    })
}

fn default_downstream() -> DownstreamKind {
    DownstreamKind::Mlp
}

fn default_trials() -> usize {
    20
}

fn default_seeds() -> usize {
    10
}

/// Dataset entry of a suite file; paths are resolved against the
/// suite file's directory when relative.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteDataset {
    pub name: String,
    pub csv: PathBuf,
    pub meta: PathBuf,
}

/// Declarative benchmark description: the cross product of datasets,
/// setups, and methods becomes one [`ExperimentConfig`] per cell.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Suite {
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    pub datasets: Vec<SuiteDataset>,
    /// `null` entries mean "no augmentation"; empty means only that.
    #[serde(default)]
    pub setups: Vec<Option<AugmentSpec>>,
    pub methods: Vec<FsMethod>,
    #[serde(default = "default_downstream")]
    pub downstream: DownstreamKind,
    #[serde(default = "default_trials")]
    pub n_trials: usize,
    #[serde(default = "default_seeds")]
    pub n_seeds: usize,
    #[serde(default)]
    pub train: Option<TrainConfig>,
    #[serde(default)]
    pub sample_cap: Option<usize>,
    #[serde(default)]
    pub search: Option<SearchSpace>,
}

impl Suite {
    pub fn load(path: &Path) -> Result<Suite, BenchError> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Loads every dataset, resolving relative paths against `base`.
    pub fn load_datasets(&self, base: &Path) -> Result<BTreeMap<String, Dataset>, BenchError> {
        let resolve = |p: &Path| {
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };
        let mut map = BTreeMap::new();
        for entry in &self.datasets {
            let ds = load_csv(&resolve(&entry.csv), &resolve(&entry.meta))?;
            if map.insert(entry.name.clone(), ds).is_some() {
                return Err(BenchError::BadConfig(format!(
                    "duplicate dataset name '{}'",
                    entry.name
                )));
            }
        }
        Ok(map)
    }

    /// Expands the cross product into named configs. Each config's
    /// master seed is derived from the suite seed and the config
    /// name, so adding or reordering cells never changes another
    /// cell's results.
    pub fn expand(&self) -> Result<Vec<ExperimentConfig>, BenchError> {
        if self.datasets.is_empty() || self.methods.is_empty() {
            return Err(BenchError::BadConfig(
                "a suite needs at least one dataset and one method".into(),
            ));
        }
        let setups: Vec<Option<AugmentSpec>> = if self.setups.is_empty() {
            vec![None]
        } else {
            self.setups.clone()
        };
        let mut configs = Vec::new();
        for ds in &self.datasets {
            for setup in &setups {
                for &method in &self.methods {
                    let mut config = ExperimentConfig::new(
                        String::new(),
                        ds.name.clone(),
                        method,
                        self.downstream,
                        0,
                    );
                    config.augment = *setup;
                    config.name = format!(
                        "{}__{}__{}",
                        ds.name,
                        config.setup_label(),
                        config.method_label()
                    );
                    config.master_seed = seeds::stream_seed(self.master_seed, &config.name, &[]);
                    config.n_trials = self.n_trials;
                    config.n_seeds = self.n_seeds;
                    if let Some(t) = &self.train {
                        config.train = t.clone();
                    }
                    config.sample_cap = self.sample_cap;
                    config.search = self.search.clone();
                    config.validate()?;
                    configs.push(config);
                }
            }
        }
        Ok(configs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synthetic_linear, Task};

    fn quick_train() -> TrainConfig {
        TrainConfig {
            max_epochs: 3,
            patience: 3,
            batch_size: 32,
            lr_decay_epochs: vec![],
            ..TrainConfig::default()
        }
    }

    fn tiny_config(name: &str, fs: FsMethod) -> ExperimentConfig {
        let mut config = ExperimentConfig::new(name, "toy", fs, DownstreamKind::Mlp, 11);
        config.n_trials = 2;
        config.n_seeds = 2;
        config.train = quick_train();
        config
    }

    fn toy_dataset() -> Dataset {
        synthetic_linear(120, &[1.5, -2.0, 0.0, 0.75], 0.1, Task::Regression, 3).unwrap()
    }

    fn toy_params() -> BTreeMap<String, f64> {
        BTreeMap::from([
            ("n_layers".to_string(), 1.0),
            ("layer_size".to_string(), 8.0),
            ("dropout".to_string(), 0.0),
            ("lr".to_string(), 1e-3),
            ("weight_decay".to_string(), 0.0),
        ])
    }

    #[test]
    fn config_validation_catches_bad_fields() {
        let mut config = tiny_config("a", FsMethod::None);
        config.n_seeds = 1;
        assert!(config.validate().is_err());
        let mut config = tiny_config("a", FsMethod::None);
        config.augment = Some(AugmentSpec {
            kind: AugmentKind::Random,
            fraction: 1.0,
        });
        assert!(config.validate().is_err());
        let mut config = tiny_config("a", FsMethod::None);
        config.name.clear();
        assert!(config.validate().is_err());
    }

    #[test]
    fn config_hash_is_stable_and_seed_sensitive() {
        let a = tiny_config("a", FsMethod::None);
        assert_eq!(a.hash().unwrap(), a.hash().unwrap());
        let mut b = a.clone();
        b.master_seed += 1;
        assert_ne!(a.hash().unwrap(), b.hash().unwrap());
    }

    #[test]
    fn combined_space_covers_each_method() {
        let s = combined_space(FsMethod::None, DownstreamKind::Mlp).unwrap();
        assert!(s.get("fs_penalty_weight").is_none());
        let s = combined_space(FsMethod::DeepLasso, DownstreamKind::Mlp).unwrap();
        assert!(matches!(
            s.get("fs_penalty_weight"),
            Some(Param::LogUniform { .. })
        ));
        let s = combined_space(FsMethod::Lasso, DownstreamKind::Gbdt).unwrap();
        assert!(matches!(
            s.get("fs_penalty_weight"),
            Some(Param::Uniform { .. })
        ));
        let s = combined_space(FsMethod::Gbdt, DownstreamKind::Gbdt).unwrap();
        assert!(s.get("fs_max_depth").is_some());
        assert!(s.get("max_depth").is_some());
        // A neural method under a tree downstream still needs the
        // MLP architecture keys for its auxiliary network.
        let s = combined_space(FsMethod::DeepLasso, DownstreamKind::Gbdt).unwrap();
        assert!(s.get("n_layers").is_some());
        assert!(s.get("learning_rate").is_some());
    }

    #[test]
    fn cap_rows_subsamples_deterministically() {
        let mut a = toy_dataset();
        let mut b = toy_dataset();
        cap_rows(&mut a, 50, 9);
        cap_rows(&mut b, 50, 9);
        assert_eq!(a.n(), 50);
        assert_eq!(a.x, b.x);
        let mut c = toy_dataset();
        cap_rows(&mut c, 50, 10);
        assert_ne!(a.x, c.x);
        // A cap at or above n leaves the dataset untouched.
        let mut d = toy_dataset();
        cap_rows(&mut d, 500, 9);
        assert_eq!(d.n(), 120);
    }

    #[test]
    fn no_fs_trial_keeps_all_columns() {
        let config = tiny_config("a", FsMethod::None);
        let prepared = Prepared::build(&config, &toy_dataset()).unwrap();
        let (record, _) = run_trial(
            &prepared,
            &config,
            "hash",
            Phase::Search { trial: 0 },
            &toy_params(),
            7,
            false,
        );
        assert_eq!(record.error, None);
        assert_eq!(record.selected, vec![0, 1, 2, 3]);
        assert!(record.val_metric.is_some());
        assert_eq!(record.test_metric, None);
    }

    #[test]
    fn trial_is_deterministic() {
        let config = tiny_config("a", FsMethod::Univariate);
        let prepared = Prepared::build(&config, &toy_dataset()).unwrap();
        let (a, _) = run_trial(
            &prepared,
            &config,
            "hash",
            Phase::Search { trial: 0 },
            &toy_params(),
            7,
            false,
        );
        let (b, _) = run_trial(
            &prepared,
            &config,
            "hash",
            Phase::Search { trial: 0 },
            &toy_params(),
            7,
            false,
        );
        assert_eq!(a, b);
    }

    #[test]
    fn missing_hyperparameter_becomes_failed_trial() {
        let config = tiny_config("a", FsMethod::Lasso);
        let prepared = Prepared::build(&config, &toy_dataset()).unwrap();
        // No fs_penalty_weight in the params.
        let (record, _) = run_trial(
            &prepared,
            &config,
            "hash",
            Phase::Search { trial: 0 },
            &toy_params(),
            7,
            false,
        );
        assert!(record
            .error
            .as_deref()
            .unwrap()
            .contains("fs_penalty_weight"));
        assert_eq!(record.val_metric, None);
        assert!(record.selected.is_empty());
    }

    #[test]
    fn augmented_cell_keeps_top_k_contract() {
        let mut config = tiny_config("a", FsMethod::Univariate);
        config.augment = Some(AugmentSpec {
            kind: AugmentKind::Random,
            fraction: 0.5,
        });
        let prepared = Prepared::build(&config, &toy_dataset()).unwrap();
        assert_eq!(prepared.ds.m_total(), 8);
        assert_eq!(prepared.ds.n_original(), 4);
        let (record, _) = run_trial(
            &prepared,
            &config,
            "hash",
            Phase::Search { trial: 0 },
            &toy_params(),
            7,
            false,
        );
        assert_eq!(record.error, None);
        assert_eq!(record.selected.len(), 4);
        assert_eq!(record.m_total, 8);
        assert_eq!(record.n_original, 4);
    }

    #[test]
    fn experiment_selects_on_validation_only() {
        let config = tiny_config("a", FsMethod::Univariate);
        let cell = run_experiment(&config, &toy_dataset()).unwrap();
        assert_eq!(cell.records.len(), 4);
        let best = cell.best_trial.unwrap();
        let search: Vec<&ResultRecord> = cell
            .records
            .iter()
            .filter(|r| matches!(r.phase, Phase::Search { .. }))
            .collect();
        let finals: Vec<&ResultRecord> = cell
            .records
            .iter()
            .filter(|r| matches!(r.phase, Phase::Final { .. }))
            .collect();
        assert_eq!(search.len(), 2);
        assert_eq!(finals.len(), 2);
        // Search never touches test data; finals always do.
        assert!(search.iter().all(|r| r.test_metric.is_none()));
        assert!(finals.iter().all(|r| r.test_metric.is_some()));
        // Finals reuse the best trial's hyperparameters verbatim.
        for r in &finals {
            assert_eq!(r.hyperparams, search[best].hyperparams);
        }
        // The best trial has the highest validation metric.
        let best_val = search[best].val_metric.unwrap();
        assert!(search.iter().all(|r| r.val_metric.unwrap() <= best_val));
        assert!(cell.complete);
        assert_eq!(cell.final_test.len(), 2);
        // Final records carry the importance vector, search records
        // do not.
        assert!(finals.iter().all(|r| r.scores.is_some()));
        assert!(search.iter().all(|r| r.scores.is_none()));
    }

    #[test]
    fn experiment_is_deterministic() {
        let config = tiny_config("a", FsMethod::Univariate);
        let a = run_experiment(&config, &toy_dataset()).unwrap();
        let b = run_experiment(&config, &toy_dataset()).unwrap();
        assert_eq!(a.records, b.records);
    }

    #[test]
    fn gbdt_downstream_runs() {
        let mut config = tiny_config("a", FsMethod::None);
        config.downstream = DownstreamKind::Gbdt;
        let prepared = Prepared::build(&config, &toy_dataset()).unwrap();
        let params = BTreeMap::from([
            ("max_depth".to_string(), 3.0),
            ("min_child_weight".to_string(), 1.0),
            ("subsample".to_string(), 0.8),
            ("learning_rate".to_string(), 0.1),
            ("colsample_bytree".to_string(), 0.8),
            ("gamma".to_string(), 0.0),
            ("lambda".to_string(), 1.0),
        ]);
        let (record, _) = run_trial(
            &prepared,
            &config,
            "hash",
            Phase::Final { seed_index: 0 },
            &params,
            7,
            true,
        );
        assert_eq!(record.error, None);
        assert!(record.val_metric.is_some());
        assert!(record.test_metric.is_some());
    }

    #[test]
    fn neural_selection_trial_runs() {
        let config = tiny_config("a", FsMethod::DeepLasso);
        let prepared = Prepared::build(&config, &toy_dataset()).unwrap();
        let mut params = toy_params();
        params.insert("fs_penalty_weight".to_string(), 0.1);
        let (record, timing) = run_trial(
            &prepared,
            &config,
            "hash",
            Phase::Search { trial: 0 },
            &params,
            7,
            false,
        );
        assert_eq!(record.error, None);
        assert_eq!(record.selected.len(), 4);
        assert!(timing.fs_seconds > 0.0);
    }

    #[test]
    fn benchmark_requires_known_dataset() {
        let config = tiny_config("a", FsMethod::None);
        let err = run_benchmark(&[config], &BTreeMap::new()).err().unwrap();
        assert!(matches!(err, BenchError::MissingDataset(_)));
        assert!(matches!(
            run_benchmark(&[], &BTreeMap::new()).err().unwrap(),
            BenchError::BadConfig(_)
        ));
    }

    #[test]
    fn suite_expands_cross_product_with_stable_seeds() {
        let suite = Suite {
            master_seed: 5,
            out_dir: None,
            datasets: vec![
                SuiteDataset {
                    name: "a".into(),
                    csv: "a.csv".into(),
                    meta: "a.json".into(),
                },
                SuiteDataset {
                    name: "b".into(),
                    csv: "b.csv".into(),
                    meta: "b.json".into(),
                },
            ],
            setups: vec![
                None,
                Some(AugmentSpec {
                    kind: AugmentKind::Random,
                    fraction: 0.5,
                }),
            ],
            methods: vec![FsMethod::None, FsMethod::DeepLasso],
            downstream: DownstreamKind::Mlp,
            n_trials: 2,
            n_seeds: 2,
            train: None,
            sample_cap: None,
            search: None,
        };
        let configs = suite.expand().unwrap();
        assert_eq!(configs.len(), 8);
        let names: std::collections::BTreeSet<&str> =
            configs.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names.len(), 8, "config names must be unique");
        assert!(names.contains("a__none__none+mlp"));
        assert!(names.contains("b__random-0.5__deep_lasso+mlp"));
        // Seeds depend only on the name, not the position.
        let by_name = |n: &str| configs.iter().find(|c| c.name == n).unwrap().master_seed;
        let mut reordered = suite.clone();
        reordered.methods.reverse();
        let again = reordered.expand().unwrap();
        let by_name2 = |n: &str| again.iter().find(|c| c.name == n).unwrap().master_seed;
        assert_eq!(
            by_name("a__none__deep_lasso+mlp"),
            by_name2("a__none__deep_lasso+mlp")
        );
    }

    #[test]
    fn suite_json_round_trips() {
        let text = r#"{
            "master_seed": 3,
            "datasets": [{"name": "toy", "csv": "toy.csv", "meta": "toy.json"}],
            "setups": [null, {"kind": "corrupt_gauss", "fraction": 0.5}],
            "methods": ["none", "univariate", "deep_lasso"],
            "n_trials": 4,
            "n_seeds": 3
        }"#;
        let suite: Suite = serde_json::from_str(text).unwrap();
        assert_eq!(suite.downstream, DownstreamKind::Mlp);
        assert_eq!(suite.expand().unwrap().len(), 6);
    }
}
