//! Experiment orchestration: random hyperparameter search over the
//! published spaces, grid execution over (method, dataset, setup,
//! seed) cells, and checksummed result persistence.
//!
//! The pipeline for one trial is: fit the feature-selection method on
//! the train split, keep the top k columns where k is the original
//! feature count, retrain the downstream model on those columns, and
//! score it on the validation split. Test metrics are computed only
//! when the best-validation hyperparameters are re-run across seeds,
//! so hyperparameter choice can never see test data.
//!
//! Every random decision flows from the experiment's master seed
//! through labeled streams keyed by trial or seed index, so the cell
//! grid can run in any parallel order and still produce byte-identical
//! result logs.

mod persist;
mod report;
mod runner;
mod space;

use thiserror::Error;

use crate::data::DataError;
use crate::nn::TrainError;
use crate::selectors::FsError;
use crate::stats::StatsError;
use crate::trees::TreesError;

pub use persist::{
    append_records, load_records, write_records, write_timings, Phase, ResultRecord, TimingRecord,
    SCHEMA_VERSION,
};
pub use report::{build_report, sig6, write_report, Report, SummaryRow};
pub use runner::{
    run_benchmark, run_experiment, AugmentSpec, BenchOutcome, CellResult, DownstreamKind,
    ExperimentConfig, FsMethod, Prepared, Suite, SuiteDataset,
};
pub use space::{Param, SearchSpace};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("search space: {0}")]
    BadSpace(String),
    #[error("experiment config: {0}")]
    BadConfig(String),
    #[error("dataset '{0}' not found in the suite's dataset map")]
    MissingDataset(String),
    #[error("hyperparameter '{0}' missing from the sampled set")]
    MissingParam(String),
    #[error("no successful search trial for '{0}'")]
    NoSuccessfulTrials(String),
    #[error("result log line {line}: checksum mismatch")]
    Corrupt { line: usize },
    #[error("result log line {line}: {reason}")]
    BadRecord { line: usize, reason: String },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Fs(#[from] FsError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Trees(#[from] TreesError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
