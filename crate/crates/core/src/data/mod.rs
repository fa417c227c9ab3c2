//! Datasets: ingestion, splits, preprocessing, and extraneous-feature
//! generators.
//!
//! A [`Dataset`] is a dense numeric matrix plus targets, per-feature
//! origin tags, and an optional train/val/test assignment. Origin tags
//! record how each column came to exist (original, random noise,
//! corrupted copy, second-order product), which is what selectors are
//! later judged against.

mod augment;
mod io;
mod preprocess;
mod synthetic;

pub use augment::{
    add_corrupted_features, add_random_features, add_second_order_features, augment, extra_count,
    AugmentKind, NoiseKind, DEFAULT_FEATURE_CAP,
};
pub use io::{load_csv, save_csv, DatasetMeta, PreprocessMethod, PreprocessSpec};
pub use preprocess::{preprocess, Preprocessor, QuantileTransformer, Standardizer};
pub use synthetic::{make_synthetic_oracle, synthetic_linear};

use ndarray::Array2;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seeds;

/// Learning task; classification carries the number of classes.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Task {
    Regression,
    Classification { n_classes: usize },
}

impl Task {
    pub fn is_classification(&self) -> bool {
        matches!(self, Task::Classification { .. })
    }

    /// Output width of a model for this task: 1 for regression, the
    /// class count for classification.
    pub fn out_dim(&self) -> usize {
        match self {
            Task::Regression => 1,
            Task::Classification { n_classes } => *n_classes,
        }
    }
}

/// How a feature column came to exist.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureOrigin {
    Original,
    Random,
    Corrupted { source: usize },
    SecondOrder { i: usize, j: usize },
}

impl FeatureOrigin {
    pub fn is_extraneous(&self) -> bool {
        !matches!(self, FeatureOrigin::Original)
    }

    /// Compact single-cell form for CSV columns.
    pub fn tag(&self) -> String {
        match self {
            FeatureOrigin::Original => "original".into(),
            FeatureOrigin::Random => "random".into(),
            FeatureOrigin::Corrupted { source } => format!("corrupted:{source}"),
            FeatureOrigin::SecondOrder { i, j } => format!("second_order:{i}:{j}"),
        }
    }

    pub fn parse_tag(s: &str) -> Option<FeatureOrigin> {
        let mut parts = s.split(':');
        match (parts.next()?, parts.next(), parts.next()) {
            ("original", None, None) => Some(FeatureOrigin::Original),
            ("random", None, None) => Some(FeatureOrigin::Random),
            ("corrupted", Some(src), None) => Some(FeatureOrigin::Corrupted {
                source: src.parse().ok()?,
            }),
            ("second_order", Some(i), Some(j)) => Some(FeatureOrigin::SecondOrder {
                i: i.parse().ok()?,
                j: j.parse().ok()?,
            }),
            _ => None,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct FeatureMeta {
    pub name: String,
    pub origin: FeatureOrigin,
}

/// Target values; classification labels are 0-based class indices.
#[derive(Clone, PartialEq, Debug)]
pub enum Targets {
    Regression(Vec<f64>),
    Classification(Vec<usize>),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Regression(v) => v.len(),
            Targets::Classification(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn subset(&self, rows: &[usize]) -> Targets {
        match self {
            Targets::Regression(v) => Targets::Regression(rows.iter().map(|&i| v[i]).collect()),
            Targets::Classification(v) => {
                Targets::Classification(rows.iter().map(|&i| v[i]).collect())
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("metadata: {0}")]
    Metadata(String),
    #[error("duplicate column name '{0}'")]
    DuplicateColumn(String),
    #[error("target column '{0}' not found")]
    MissingTarget(String),
    #[error("row {row}, column '{column}': cannot parse '{value}' as a number")]
    NonNumericCell {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}, column '{column}': missing value")]
    MissingValue { row: usize, column: String },
    #[error("bad class label: {0}")]
    BadLabel(String),
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("class {class} has {got} samples, need at least 3 for a stratified split")]
    SmallClass { class: usize, got: usize },
    #[error("no split assignment; call assign_split first")]
    NoSplit,
    #[error("column '{0}' has zero variance on the train split")]
    ZeroVariance(String),
    #[error("extra-feature fraction {0} outside (0, 1)")]
    BadFraction(f64),
    #[error("augmentation would reach {total} columns, cap is {cap}")]
    FeatureCap { total: usize, cap: usize },
    #[error("second-order features need at least 2 original columns")]
    TooFewColumns,
    #[error("length mismatch: {0}")]
    Length(String),
    #[error("{0}")]
    Unsupported(String),
}

/// Tabular dataset with feature provenance and an optional split.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub y: Targets,
    pub task: Task,
    pub features: Vec<FeatureMeta>,
    pub target_name: String,
    pub split: Option<Vec<Split>>,
    pub split_seed: Option<u64>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn m_total(&self) -> usize {
        self.x.ncols()
    }

    /// Count of original (non-extraneous) features; the top-k budget.
    pub fn n_original(&self) -> usize {
        self.features
            .iter()
            .filter(|f| f.origin == FeatureOrigin::Original)
            .count()
    }

    /// Draws and stores a train/val/test assignment: 20% test, 15% val,
    /// rest train, stratified by class for classification.
    pub fn assign_split(&mut self, seed: u64) -> Result<(), DataError> {
        self.split = Some(split_assignment(&self.y, self.n(), seed)?);
        self.split_seed = Some(seed);
        Ok(())
    }

    /// Row indices of one split, in dataset order.
    pub fn rows_in(&self, split: Split) -> Result<Vec<usize>, DataError> {
        let assignment = self.split.as_ref().ok_or(DataError::NoSplit)?;
        Ok(assignment
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == split)
            .map(|(i, _)| i)
            .collect())
    }

    /// Sub-matrix of the given rows, optionally restricted to columns.
    pub fn x_rows(&self, rows: &[usize], cols: Option<&[usize]>) -> Array2<f64> {
        let picked = self.x.select(ndarray::Axis(0), rows);
        match cols {
            Some(c) => picked.select(ndarray::Axis(1), c),
            None => picked,
        }
    }

    pub fn y_rows(&self, rows: &[usize]) -> Targets {
        self.y.subset(rows)
    }

    pub(crate) fn append_columns(
        &mut self,
        cols: Array2<f64>,
        metas: Vec<FeatureMeta>,
    ) -> Result<(), DataError> {
        debug_assert_eq!(cols.ncols(), metas.len());
        let joined = ndarray::concatenate(ndarray::Axis(1), &[self.x.view(), cols.view()])
            .map_err(|e| DataError::Length(e.to_string()))?;
        self.x = joined;
        self.features.extend(metas);
        Ok(())
    }
}

/// Number of rows the 20% test fraction claims out of `n`.
fn test_count(n: usize) -> usize {
    (n as f64 * 0.2).round() as usize
}

/// Number of rows the 15% val fraction claims out of `n`.
fn val_count(n: usize) -> usize {
    (n as f64 * 0.15).round() as usize
}

/// Largest-remainder allocation of `total` slots across class sizes in
/// proportion to `fraction`. Ties go to the lower class index.
fn proportional_quota(counts: &[usize], fraction: f64, total: usize) -> Vec<usize> {
    let ideals: Vec<f64> = counts.iter().map(|&c| c as f64 * fraction).collect();
    let mut quota: Vec<usize> = ideals.iter().map(|&v| v.floor() as usize).collect();
    let mut remaining = total - quota.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = ideals[a] - ideals[a].floor();
        let fb = ideals[b] - ideals[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &c in order.iter().cycle() {
        if remaining == 0 {
            break;
        }
        quota[c] += 1;
        remaining -= 1;
    }
    quota
}

/// Split assignment as a free function, for callers that manage rows
/// themselves. Regression shuffles globally; classification allocates
/// per class so split proportions stay within one sample of global.
pub fn split_assignment(y: &Targets, n: usize, seed: u64) -> Result<Vec<Split>, DataError> {
    if n < 10 {
        return Err(DataError::TooFewSamples { need: 10, got: n });
    }
    if y.len() != n {
        return Err(DataError::Length(format!(
            "{} targets for {n} rows",
            y.len()
        )));
    }
    let n_test = test_count(n);
    let n_val = val_count(n);
    let mut rng = seeds::stream_rng(seed, "split", &[]);
    let mut assignment = vec![Split::Train; n];
    match y {
        Targets::Regression(_) => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            for &i in &order[..n_test] {
                assignment[i] = Split::Test;
            }
            for &i in &order[n_test..n_test + n_val] {
                assignment[i] = Split::Val;
            }
        }
        Targets::Classification(labels) => {
            let n_classes = labels.iter().max().map_or(0, |&c| c + 1);
            let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
            for (i, &c) in labels.iter().enumerate() {
                by_class[c].push(i);
            }
            for (class, rows) in by_class.iter().enumerate() {
                if rows.len() < 3 {
                    return Err(DataError::SmallClass {
                        class,
                        got: rows.len(),
                    });
                }
            }
            let counts: Vec<usize> = by_class.iter().map(Vec::len).collect();
            let test_quota = proportional_quota(&counts, 0.2, n_test);
            let val_quota = proportional_quota(&counts, 0.15, n_val);
            for (class, rows) in by_class.iter().enumerate() {
                let mut order = rows.clone();
                order.shuffle(&mut rng);
                let t = test_quota[class];
                let v = val_quota[class];
                for &i in &order[..t] {
                    assignment[i] = Split::Test;
                }
                for &i in &order[t..t + v] {
                    assignment[i] = Split::Val;
                }
            }
        }
    }
    Ok(assignment)
}
