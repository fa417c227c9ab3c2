//! Feature-selection methods.
//!
//! Every selector reduces to the same currency: a [`FeatureScores`]
//! vector of nonnegative importances over all columns, from which
//! [`select_top_k`] keeps the k best. Scores come from univariate F
//! statistics, L1-penalised linear models, group penalties on a
//! network's first layer, or norms of the loss gradient with respect to
//! the inputs.

mod lasso;
mod neural;
mod penalty;
mod univariate;

pub use lasso::{lasso_fit, LassoOptions};
pub use neural::{
    adaptive_group_lasso_fit, deep_lasso_fit, first_layer_lasso_fit, input_gradient_norms,
};
pub use penalty::{deep_lasso_penalty, group_lasso_penalty};
pub use univariate::univariate_scores;

use std::path::Path;

use thiserror::Error;

use crate::autodiff::AutodiffError;
use crate::data::{FeatureMeta, FeatureOrigin};
use crate::nn::TrainError;

#[derive(Debug, Error)]
pub enum FsError {
    #[error("score at index {index} is {value}, scores must be finite and nonnegative")]
    BadScore { index: usize, value: f64 },
    #[error("empty score vector")]
    Empty,
    #[error("k={k} outside 1..={m}")]
    KOutOfRange { k: usize, m: usize },
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteInput { row: usize, col: usize },
    #[error("F statistic needs more samples than classes: n={n}, k={k}")]
    DegreesOfFreedom { n: usize, k: usize },
    #[error("length mismatch: {0}")]
    Length(String),
    #[error("alpha {0} outside (0, 1]")]
    BadAlpha(f64),
    #[error("lasso diverged at iteration {iter} (objective {objective:e}); reduce step_scale")]
    Divergence { iter: usize, objective: f64 },
    #[error("penalty input: {0}")]
    PenaltyInput(String),
    #[error(transparent)]
    Graph(#[from] AutodiffError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("scores file: {0}")]
    ScoresFile(String),
}

/// Importance per feature column, all finite and nonnegative.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureScores {
    pub scores: Vec<f64>,
    /// Which selector produced the scores, e.g. "deep_lasso".
    pub method: String,
    /// Which split the scores were computed on, e.g. "train".
    pub computed_on: String,
}

impl FeatureScores {
    pub fn new(
        scores: Vec<f64>,
        method: impl Into<String>,
        computed_on: impl Into<String>,
    ) -> Result<Self, FsError> {
        if scores.is_empty() {
            return Err(FsError::Empty);
        }
        for (index, &value) in scores.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(FsError::BadScore { index, value });
            }
        }
        Ok(FeatureScores {
            scores,
            method: method.into(),
            computed_on: computed_on.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Indices of the k largest scores, ties broken toward the lower index,
/// returned in ascending index order.
pub fn select_top_k(scores: &FeatureScores, k: usize) -> Result<Vec<usize>, FsError> {
    let m = scores.len();
    if k == 0 || k > m {
        return Err(FsError::KOutOfRange { k, m });
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        scores.scores[b]
            .partial_cmp(&scores.scores[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut picked: Vec<usize> = order[..k].to_vec();
    picked.sort_unstable();
    Ok(picked)
}

/// Writes scores with feature metadata, one row per column:
/// feature_index, feature_name, origin, score, method, split, seed.
pub fn write_scores_csv(
    path: &Path,
    scores: &FeatureScores,
    features: &[FeatureMeta],
    seed: u64,
) -> Result<(), FsError> {
    if features.len() != scores.len() {
        return Err(FsError::Length(format!(
            "{} features for {} scores",
            features.len(),
            scores.len()
        )));
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "feature_index",
        "feature_name",
        "origin",
        "score",
        "method",
        "split",
        "seed",
    ])?;
    for (i, (f, &s)) in features.iter().zip(&scores.scores).enumerate() {
        w.write_record([
            i.to_string(),
            f.name.clone(),
            f.origin.tag(),
            s.to_string(),
            scores.method.clone(),
            scores.computed_on.clone(),
            seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a scores CSV back into scores plus feature metadata.
pub fn read_scores_csv(path: &Path) -> Result<(FeatureScores, Vec<FeatureMeta>), FsError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    let mut raw: Vec<(usize, String, FeatureOrigin, f64, String, String)> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let get = |i: usize| -> Result<&str, FsError> {
            record
                .get(i)
                .ok_or_else(|| FsError::ScoresFile(format!("row with {} fields", record.len())))
        };
        let index: usize = get(0)?
            .parse()
            .map_err(|_| FsError::ScoresFile(format!("bad index '{}'", get(0).unwrap())))?;
        let origin = FeatureOrigin::parse_tag(get(2)?)
            .ok_or_else(|| FsError::ScoresFile(format!("bad origin '{}'", get(2).unwrap())))?;
        let score: f64 = get(3)?
            .parse()
            .map_err(|_| FsError::ScoresFile(format!("bad score '{}'", get(3).unwrap())))?;
        raw.push((
            index,
            get(1)?.to_string(),
            origin,
            score,
            get(4)?.to_string(),
            get(5)?.to_string(),
        ));
    }
    raw.sort_by_key(|r| r.0);
    for (expected, row) in raw.iter().enumerate() {
        if row.0 != expected {
            return Err(FsError::ScoresFile(format!(
                "feature indices not contiguous at {expected}"
            )));
        }
    }
    let first = raw.first().ok_or(FsError::Empty)?;
    let (method, split) = (first.4.clone(), first.5.clone());
    let features = raw
        .iter()
        .map(|r| FeatureMeta {
            name: r.1.clone(),
            origin: r.2,
        })
        .collect();
    let scores = FeatureScores::new(raw.iter().map(|r| r.3).collect(), method, split)?;
    Ok((scores, features))
}

/// Penalty strength and related knobs shared by the penalised selectors.
/// The training objective is `alpha * loss + (1 - alpha) * penalty`.
#[derive(Clone, Copy, Debug)]
pub struct PenaltyConfig {
    pub alpha: f64,
    /// Adaptive-weight exponent for the two-stage group lasso.
    pub gamma: f64,
    /// Smoothing added under the square root of each group norm so the
    /// penalty stays differentiable at zero.
    pub eps_norm: f64,
}

impl PenaltyConfig {
    /// Config from the penalty weight (1 - alpha).
    pub fn from_penalty_weight(weight: f64) -> Result<Self, FsError> {
        let alpha = 1.0 - weight;
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(FsError::BadAlpha(alpha));
        }
        Ok(PenaltyConfig {
            alpha,
            gamma: 1.0,
            eps_norm: 1e-12,
        })
    }

    pub fn validate(&self) -> Result<(), FsError> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(FsError::BadAlpha(self.alpha));
        }
        Ok(())
    }
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        PenaltyConfig {
            alpha: 0.9,
            gamma: 1.0,
            eps_norm: 1e-12,
        }
    }
}
