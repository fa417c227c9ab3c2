//! Command-line surface for the feature-selection toolkit.
//!
//! Subcommands cover the pipeline end to end: `synth` emits a
//! synthetic dataset, `augment` appends extraneous columns, `select`
//! scores features with one method, `train` retrains a downstream
//! model on a score file's top-k columns, `bench` runs a suite file,
//! and `report` rebuilds tables from a result log.
//!
//! Every command honors `--seed`, so identical invocations produce
//! identical output files. Exit codes: 0 success, 2 usage error,
//! 3 data error, 4 numeric failure; pipeline errors print one
//! machine-parsable line on stderr.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::{Array2, Axis};

use tabfs::bench::{
    append_records, build_report, load_records, run_benchmark, sig6, write_report, write_timings,
    BenchError, Suite,
};
use tabfs::data::{
    augment, load_csv, make_synthetic_oracle, preprocess, save_csv, AugmentKind, DataError,
    Dataset, PreprocessMethod, PreprocessSpec, Split, Targets, Task, DEFAULT_FEATURE_CAP,
};
use tabfs::nn::{self, MlpSpec, TrainConfig, TrainError};
use tabfs::seeds;
use tabfs::selectors::{
    adaptive_group_lasso_fit, deep_lasso_fit, first_layer_lasso_fit, lasso_fit, read_scores_csv,
    select_top_k, univariate_scores, write_scores_csv, FeatureScores, FsError, LassoOptions,
    PenaltyConfig,
};
use tabfs::stats::{downstream_metric, StatsError};
use tabfs::trees::{fit_forest, fit_gbdt, ForestConfig, GbdtConfig, TreesError};

/// Environment variable that overrides the output directory when no
/// flag is given.
const OUT_DIR_ENV: &str = "TABFS_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "tabfs",
    version,
    about = "Feature selection and benchmarking for tabular learning"
)]
struct Cli {
    /// Master seed for all random streams; on `bench` it overrides
    /// the suite's master_seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic linear dataset with known coefficients.
    Synth(SynthArgs),
    /// Append extraneous feature columns to a dataset.
    Augment(AugmentArgs),
    /// Score features with one selection method.
    Select(SelectArgs),
    /// Train a downstream model on the top-k columns of a score file.
    Train(TrainArgs),
    /// Run a benchmark suite file.
    Bench(BenchArgs),
    /// Rebuild report tables from a result log.
    Report(ReportArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TaskArg {
    Regression,
    Classification,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Random,
    CorruptGauss,
    CorruptLaplace,
    SecondOrder,
}

impl From<KindArg> for AugmentKind {
    fn from(kind: KindArg) -> AugmentKind {
        match kind {
            KindArg::Random => AugmentKind::Random,
            KindArg::CorruptGauss => AugmentKind::CorruptGauss,
            KindArg::CorruptLaplace => AugmentKind::CorruptLaplace,
            KindArg::SecondOrder => AugmentKind::SecondOrder,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Univariate,
    Lasso,
    FirstLayerLasso,
    AdaptiveGroupLasso,
    DeepLasso,
    RandomForest,
    Gbdt,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DownstreamArg {
    Mlp,
    Gbdt,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PreprocessArg {
    Quantile,
    Standardize,
    None,
}

#[derive(Args)]
struct SynthArgs {
    /// Basename for the CSV and metadata files.
    #[arg(long, default_value = "oracle")]
    name: String,
    /// Rows to generate.
    #[arg(long, default_value_t = 2000)]
    n: usize,
    /// Informative feature count; targets are a noisy linear map of
    /// these columns.
    #[arg(long, default_value_t = 20)]
    informative: usize,
    #[arg(long, value_enum, default_value_t = TaskArg::Regression)]
    task: TaskArg,
    /// Output directory; TABFS_OUT_DIR overrides the default.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct AugmentArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    meta: PathBuf,
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Extraneous share of the augmented dataset, in (0, 1).
    #[arg(long, default_value_t = 0.5)]
    fraction: f64,
    /// Ceiling on total columns after augmentation.
    #[arg(long, default_value_t = DEFAULT_FEATURE_CAP)]
    cap: usize,
    #[arg(long)]
    out_data: PathBuf,
    #[arg(long)]
    out_meta: PathBuf,
}

/// Architecture and optimization flags shared by every command that
/// trains an MLP.
#[derive(Args)]
struct MlpFlags {
    #[arg(long, default_value_t = 2)]
    n_layers: usize,
    #[arg(long, default_value_t = 64)]
    layer_size: usize,
    #[arg(long, default_value_t = 0.0)]
    dropout: f64,
    #[arg(long, default_value_t = 40)]
    max_epochs: usize,
    #[arg(long, default_value_t = 15)]
    patience: usize,
    #[arg(long, default_value_t = 256)]
    batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 0.0)]
    weight_decay: f64,
}

impl MlpFlags {
    fn spec(&self, in_dim: usize, out_dim: usize) -> MlpSpec {
        MlpSpec {
            n_layers: self.n_layers,
            layer_size: self.layer_size,
            dropout: self.dropout,
            in_dim,
            out_dim,
        }
    }

    fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            max_epochs: self.max_epochs,
            patience: self.patience,
            batch_size: self.batch_size,
            lr: self.lr,
            weight_decay: self.weight_decay,
            lr_decay_epochs: Vec::new(),
            lr_decay_factor: 1.0,
            seed,
        }
    }
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    meta: PathBuf,
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Score file to write, one row per feature.
    #[arg(long)]
    out: PathBuf,
    /// Penalty weight for the regularized methods; the data-fit term
    /// gets weight 1 minus this.
    #[arg(long, default_value_t = 0.1)]
    penalty_weight: f64,
    /// Adaptive reweighting exponent for adaptive-group-lasso.
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Linear-lasso solver step scale; values above 1 can diverge.
    #[arg(long, default_value_t = 1.0)]
    step_scale: f64,
    /// Tree count for random-forest and gbdt selection.
    #[arg(long, default_value_t = 100)]
    n_estimators: usize,
    /// Tree depth for random-forest and gbdt selection.
    #[arg(long, default_value_t = 6)]
    max_depth: usize,
    #[arg(long, value_enum, default_value_t = PreprocessArg::Quantile)]
    preprocess: PreprocessArg,
    #[command(flatten)]
    mlp: MlpFlags,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    meta: PathBuf,
    /// Score file from `select`; omitted means no selection.
    #[arg(long)]
    scores: Option<PathBuf>,
    /// Columns to keep; defaults to the dataset's original feature
    /// count. Requires --scores.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_enum, default_value_t = DownstreamArg::Mlp)]
    downstream: DownstreamArg,
    /// Optional JSON file for the metrics and selected columns.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = PreprocessArg::Quantile)]
    preprocess: PreprocessArg,
    #[command(flatten)]
    mlp: MlpFlags,
}

#[derive(Args)]
struct BenchArgs {
    /// Suite definition file (JSON).
    #[arg(long)]
    suite: PathBuf,
    /// Output directory; falls back to TABFS_OUT_DIR, then the
    /// suite's out_dir, then "results".
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Parallel cells; defaults to the rayon global setting.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct ReportArgs {
    /// Result log produced by `bench`.
    #[arg(long)]
    log: PathBuf,
    /// Directory for report.md, summary.csv, and similarity.csv; the
    /// markdown is always printed to stdout.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

/// Top-level error with an exit-code category.
#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(DataError),
    Fs(FsError),
    Train(TrainError),
    Trees(TreesError),
    Stats(StatsError),
    Bench(BenchError),
    Json(serde_json::Error),
    Io(std::io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Data(e) => write!(f, "{e}"),
            CliError::Fs(e) => write!(f, "{e}"),
            CliError::Train(e) => write!(f, "{e}"),
            CliError::Trees(e) => write!(f, "{e}"),
            CliError::Stats(e) => write!(f, "{e}"),
            CliError::Bench(e) => write!(f, "{e}"),
            CliError::Json(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

macro_rules! from_err {
    ($variant:ident, $ty:ty) => {
        impl From<$ty> for CliError {
            fn from(e: $ty) -> CliError {
                CliError::$variant(e)
            }
        }
    };
}

from_err!(Data, DataError);
from_err!(Fs, FsError);
from_err!(Train, TrainError);
from_err!(Trees, TreesError);
from_err!(Stats, StatsError);
from_err!(Bench, BenchError);
from_err!(Json, serde_json::Error);
from_err!(Io, std::io::Error);

const EXIT_USAGE: i32 = 2;
const EXIT_DATA: i32 = 3;
const EXIT_NUMERIC: i32 = 4;

fn fs_code(e: &FsError) -> i32 {
    match e {
        FsError::Divergence { .. } => EXIT_NUMERIC,
        FsError::BadAlpha(_) | FsError::KOutOfRange { .. } | FsError::PenaltyInput(_) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

fn train_code(e: &TrainError) -> i32 {
    match e {
        TrainError::NonFiniteLoss { .. } | TrainError::Graph(_) | TrainError::Hook(_) => {
            EXIT_NUMERIC
        }
        TrainError::BadSpec(_) | TrainError::BadConfig(_) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

fn trees_code(e: &TreesError) -> i32 {
    match e {
        TreesError::NonFiniteGradient { .. } => EXIT_NUMERIC,
        TreesError::BadParam(_) => EXIT_USAGE,
        TreesError::Scores(inner) => fs_code(inner),
        _ => EXIT_DATA,
    }
}

fn bench_code(e: &BenchError) -> i32 {
    match e {
        BenchError::BadSpace(_) | BenchError::BadConfig(_) | BenchError::MissingParam(_) => {
            EXIT_USAGE
        }
        BenchError::Fs(inner) => fs_code(inner),
        BenchError::Train(inner) => train_code(inner),
        BenchError::Trees(inner) => trees_code(inner),
        _ => EXIT_DATA,
    }
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Fs(e) => fs_code(e),
            CliError::Train(e) => train_code(e),
            CliError::Trees(e) => trees_code(e),
            CliError::Bench(e) => bench_code(e),
            CliError::Data(_) | CliError::Stats(_) | CliError::Json(_) | CliError::Io(_) => {
                EXIT_DATA
            }
        }
    }

    fn kind(&self) -> &'static str {
        match self.code() {
            EXIT_USAGE => "usage",
            EXIT_NUMERIC => "numeric",
            _ => "data",
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: kind={} code={} msg=\"{}\"", e.kind(), e.code(), e);
        std::process::exit(e.code());
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let seed = cli.seed.unwrap_or(0);
    match cli.command {
        Command::Synth(args) => cmd_synth(args, seed),
        Command::Augment(args) => cmd_augment(args, seed),
        Command::Select(args) => cmd_select(args, seed),
        Command::Train(args) => cmd_train(args, seed),
        Command::Bench(args) => cmd_bench(args, cli.seed),
        Command::Report(args) => cmd_report(args),
    }
}

/// Flag value, then the environment override, then `fallback`.
fn resolve_out_dir(flag: Option<PathBuf>, fallback: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .or(fallback)
        .unwrap_or_else(|| PathBuf::from("results"))
}

/// Keeps a stored split when the file has one, otherwise assigns a
/// fresh one from the seed.
fn ensure_split(ds: &mut Dataset, seed: u64) -> Result<(), DataError> {
    if ds.split.is_none() {
        ds.assign_split(seeds::stream_seed(seed, "split", &[]))?;
    }
    Ok(())
}

fn preprocess_spec(arg: PreprocessArg) -> PreprocessSpec {
    let default = match arg {
        PreprocessArg::Quantile => PreprocessMethod::Quantile,
        PreprocessArg::Standardize => PreprocessMethod::Standardize,
        PreprocessArg::None => PreprocessMethod::None,
    };
    PreprocessSpec {
        default,
        overrides: BTreeMap::new(),
        standardize_target: true,
    }
}

fn cmd_synth(args: SynthArgs, seed: u64) -> Result<(), CliError> {
    let task = match args.task {
        TaskArg::Regression => Task::Regression,
        TaskArg::Classification => Task::Classification { n_classes: 2 },
    };
    let mut ds = make_synthetic_oracle(args.n, args.informative, task, seed)?;
    ds.assign_split(seeds::stream_seed(seed, "split", &[]))?;
    let dir = resolve_out_dir(args.out_dir, None);
    std::fs::create_dir_all(&dir)?;
    let csv = dir.join(format!("{}.csv", args.name));
    let meta = dir.join(format!("{}.meta.json", args.name));
    save_csv(&ds, &csv, &meta)?;
    println!(
        "wrote {} rows x {} columns to {}",
        ds.n(),
        ds.m_total(),
        csv.display()
    );
    Ok(())
}

fn cmd_augment(args: AugmentArgs, seed: u64) -> Result<(), CliError> {
    let mut ds = load_csv(&args.data, &args.meta)?;
    // Corruption noise is scaled by train statistics, so a split must
    // exist before any generator runs.
    ensure_split(&mut ds, seed)?;
    let added = augment(
        &mut ds,
        args.kind.into(),
        args.fraction,
        seeds::stream_seed(seed, "augment", &[]),
        args.cap,
    )?;
    save_csv(&ds, &args.out_data, &args.out_meta)?;
    println!(
        "added {added} extraneous columns; total {} columns in {}",
        ds.m_total(),
        args.out_data.display()
    );
    Ok(())
}

/// Train/validation matrices of the preprocessed dataset.
struct SplitViews {
    x_train: Array2<f64>,
    x_val: Array2<f64>,
    x_test: Array2<f64>,
    y_train: Targets,
    y_val: Targets,
    y_test: Targets,
}

fn load_prepared(
    data: &Path,
    meta: &Path,
    spec: PreprocessArg,
    seed: u64,
) -> Result<(Dataset, SplitViews), CliError> {
    let mut ds = load_csv(data, meta)?;
    ensure_split(&mut ds, seed)?;
    preprocess(&mut ds, &preprocess_spec(spec))?;
    let rows_train = ds.rows_in(Split::Train)?;
    let rows_val = ds.rows_in(Split::Val)?;
    let rows_test = ds.rows_in(Split::Test)?;
    let views = SplitViews {
        x_train: ds.x_rows(&rows_train, None),
        x_val: ds.x_rows(&rows_val, None),
        x_test: ds.x_rows(&rows_test, None),
        y_train: ds.y_rows(&rows_train),
        y_val: ds.y_rows(&rows_val),
        y_test: ds.y_rows(&rows_test),
    };
    Ok((ds, views))
}

fn cmd_select(args: SelectArgs, seed: u64) -> Result<(), CliError> {
    let (ds, v) = load_prepared(&args.data, &args.meta, args.preprocess, seed)?;
    let fit_seed = seeds::stream_seed(seed, "feature-scores", &[]);
    let scores: FeatureScores = match args.method {
        MethodArg::Univariate => univariate_scores(v.x_train.view(), &v.y_train)?,
        MethodArg::Lasso => {
            let alpha = PenaltyConfig::from_penalty_weight(args.penalty_weight)?.alpha;
            let options = LassoOptions {
                step_scale: args.step_scale,
                ..LassoOptions::default()
            };
            lasso_fit(v.x_train.view(), &v.y_train, alpha, &options, fit_seed)?
        }
        MethodArg::FirstLayerLasso | MethodArg::AdaptiveGroupLasso | MethodArg::DeepLasso => {
            let mut pcfg = PenaltyConfig::from_penalty_weight(args.penalty_weight)?;
            pcfg.gamma = args.gamma;
            let spec = args.mlp.spec(ds.m_total(), ds.task.out_dim());
            let cfg = args.mlp.train_config(fit_seed);
            let fit = match args.method {
                MethodArg::FirstLayerLasso => first_layer_lasso_fit,
                MethodArg::AdaptiveGroupLasso => adaptive_group_lasso_fit,
                _ => deep_lasso_fit,
            };
            let (_, s) = fit(
                &spec,
                v.x_train.view(),
                &v.y_train,
                v.x_val.view(),
                &v.y_val,
                &cfg,
                &pcfg,
            )?;
            s
        }
        MethodArg::RandomForest => {
            let cfg = ForestConfig {
                n_estimators: args.n_estimators,
                max_depth: args.max_depth,
                ..ForestConfig::default()
            };
            let (_, s) = fit_forest(v.x_train.view(), &v.y_train, &cfg, fit_seed)?;
            s
        }
        MethodArg::Gbdt => {
            let cfg = GbdtConfig {
                n_estimators: args.n_estimators,
                max_depth: args.max_depth,
                ..GbdtConfig::default()
            };
            let (_, s) = fit_gbdt(
                v.x_train.view(),
                &v.y_train,
                &cfg,
                fit_seed,
                v.x_val.view(),
                &v.y_val,
            )?;
            s
        }
    };
    write_scores_csv(&args.out, &scores, &ds.features, seed)?;
    let top = scores
        .scores
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(&a.0)))
        .expect("scores are non-empty");
    println!(
        "wrote {} scores to {}; top feature {} ({})",
        scores.len(),
        args.out.display(),
        ds.features[top.0].name,
        sig6(*top.1)
    );
    Ok(())
}

fn cmd_train(args: TrainArgs, seed: u64) -> Result<(), CliError> {
    let (ds, v) = load_prepared(&args.data, &args.meta, args.preprocess, seed)?;
    let selected: Vec<usize> = match &args.scores {
        Some(path) => {
            let (scores, _) = read_scores_csv(path)?;
            if scores.len() != ds.m_total() {
                return Err(CliError::Usage(format!(
                    "score file has {} rows but the dataset has {} columns",
                    scores.len(),
                    ds.m_total()
                )));
            }
            select_top_k(&scores, args.k.unwrap_or_else(|| ds.n_original()))?
        }
        None => {
            if args.k.is_some() {
                return Err(CliError::Usage(
                    "--k needs --scores; without a score file all columns are used".into(),
                ));
            }
            (0..ds.m_total()).collect()
        }
    };
    let x_train = v.x_train.select(Axis(1), &selected);
    let x_val = v.x_val.select(Axis(1), &selected);
    let x_test = v.x_test.select(Axis(1), &selected);
    let model_seed = seeds::stream_seed(seed, "downstream", &[]);
    let (val_metric, test_metric) = match args.downstream {
        DownstreamArg::Mlp => {
            let spec = args.mlp.spec(selected.len(), ds.task.out_dim());
            let cfg = args.mlp.train_config(model_seed);
            let trained = nn::fit(
                &spec,
                x_train.view(),
                &v.y_train,
                x_val.view(),
                &v.y_val,
                &cfg,
                None,
            )?;
            let val = nn::predict_targets(&trained.model, x_val.view(), ds.task)?;
            let test = nn::predict_targets(&trained.model, x_test.view(), ds.task)?;
            (
                downstream_metric(&val, &v.y_val)?,
                downstream_metric(&test, &v.y_test)?,
            )
        }
        DownstreamArg::Gbdt => {
            let (model, _) = fit_gbdt(
                x_train.view(),
                &v.y_train,
                &GbdtConfig::default(),
                model_seed,
                x_val.view(),
                &v.y_val,
            )?;
            (
                downstream_metric(&model.predict(x_val.view())?, &v.y_val)?,
                downstream_metric(&model.predict(x_test.view())?, &v.y_test)?,
            )
        }
    };
    println!("selected {} of {} columns", selected.len(), ds.m_total());
    println!("val_metric {}", sig6(val_metric));
    println!("test_metric {}", sig6(test_metric));
    if let Some(path) = args.out {
        let payload = serde_json::json!({
            "selected": selected,
            "val_metric": val_metric,
            "test_metric": test_metric,
            "seed": seed,
        });
        std::fs::write(&path, serde_json::to_string_pretty(&payload)? + "\n")?;
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs, seed: Option<u64>) -> Result<(), CliError> {
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        // The global pool can only be set once per process; a failure
        // here means it was already initialized.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    let mut suite = Suite::load(&args.suite)?;
    if let Some(seed) = seed {
        suite.master_seed = seed;
    }
    let base = args
        .suite
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let configs = suite.expand()?;
    let datasets = suite.load_datasets(&base)?;
    let outcome = run_benchmark(&configs, &datasets)?;
    let dir = resolve_out_dir(args.out_dir, suite.out_dir.clone());
    std::fs::create_dir_all(&dir)?;
    let log_path = dir.join("results.jsonl");
    let appended = append_records(&log_path, &outcome.records)?;
    write_timings(&dir.join("timings.jsonl"), &outcome.timings)?;
    write_report(&dir, &outcome.report)?;
    let complete = outcome.report.rows.iter().filter(|r| r.complete).count();
    println!(
        "ran {} cells ({} complete); {appended} new records in {}",
        configs.len(),
        complete,
        log_path.display()
    );
    if let Some(table) = &outcome.report.rank_table {
        for (i, method) in table.methods.iter().enumerate() {
            println!("rank {:.2}  {method}", outcome.report.mean_ranks[i]);
        }
    }
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<(), CliError> {
    let records = load_records(&args.log)?;
    let report = build_report(&records)?;
    let dir = args
        .out_dir
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from));
    if let Some(dir) = dir {
        write_report(&dir, &report)?;
    }
    print!("{}", report.markdown);
    Ok(())
}
