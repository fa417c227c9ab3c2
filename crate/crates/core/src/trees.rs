//! Tree-ensemble selectors: a random forest scored by impurity
//! decrease and second-order gradient-boosted trees scored by split
//! gain.
//!
//! Trees grow by exact greedy search over sorted feature values.
//! Thresholds sit halfway between distinct neighbouring values, a
//! split is kept only when it strictly improves its criterion, and
//! ties break toward the lowest feature index, so fits are
//! deterministic given the seed and constant features are never
//! chosen. Nodes live in a flat list per tree with child indices,
//! which doubles as the serialization format.

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

use crate::data::{Targets, Task};
use crate::seeds;
use crate::selectors::FeatureScores;

/// Guards leaf-weight and gain denominators when hessians vanish and
/// lambda is zero; saturated nodes then get large finite weights that
/// the learning rate damps.
const DENOM_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum TreesError {
    #[error("bad parameter: {0}")]
    BadParam(String),
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteInput { row: usize, col: usize },
    #[error("length mismatch: {0}")]
    Length(String),
    #[error("classification target has a single class")]
    SingleClass,
    #[error("ensemble expects {expected} features, got {got}")]
    FeatureMismatch { expected: usize, got: usize },
    #[error("non-finite gradient at boosting round {round}")]
    NonFiniteGradient { round: usize },
    #[error(transparent)]
    Scores(#[from] crate::selectors::FsError),
    #[error("model file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// One node in a flat tree. `gain` on a split is the quantity the
/// importance score accumulates: the weighted impurity decrease for
/// forests, the regularized objective gain for boosted trees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        n_samples: usize,
        impurity: f64,
        value: Vec<f64>,
    },
    Split {
        n_samples: usize,
        impurity: f64,
        feature_index: usize,
        threshold: f64,
        left: usize,
        right: usize,
        gain: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    /// Routes a row to its leaf; rows with value <= threshold go left.
    pub fn leaf_value(&self, row: ArrayView1<f64>) -> &[f64] {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                TreeNode::Leaf { value, .. } => return value,
                TreeNode::Split {
                    feature_index,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    id = if row[*feature_index] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        self.depth_from(0)
    }

    fn depth_from(&self, id: usize) -> usize {
        match &self.nodes[id] {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => {
                1 + self.depth_from(*left).max(self.depth_from(*right))
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_estimators: 100,
            max_depth: 10,
            min_samples_leaf: 1,
            min_samples_split: 2,
        }
    }
}

impl ForestConfig {
    fn validate(&self) -> Result<(), TreesError> {
        if self.n_estimators < 1 || self.n_estimators > 2000 {
            return Err(TreesError::BadParam(format!(
                "n_estimators {} outside 1..=2000",
                self.n_estimators
            )));
        }
        if self.max_depth < 1 || self.max_depth > 64 {
            return Err(TreesError::BadParam(format!(
                "max_depth {} outside 1..=64",
                self.max_depth
            )));
        }
        if self.min_samples_leaf < 1 {
            return Err(TreesError::BadParam("min_samples_leaf must be >= 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(TreesError::BadParam(
                "min_samples_split must be >= 2".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GbdtConfig {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    /// Minimum hessian sum on each side of a split.
    pub min_child_weight: f64,
    /// Row fraction drawn without replacement per tree.
    pub subsample: f64,
    /// Column fraction drawn without replacement per tree.
    pub colsample_bytree: f64,
    /// Flat gain cost per split.
    pub gamma: f64,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
    pub early_stopping_rounds: usize,
}

impl Default for GbdtConfig {
    fn default() -> Self {
        GbdtConfig {
            n_estimators: 200,
            learning_rate: 0.3,
            max_depth: 6,
            min_child_weight: 1.0,
            subsample: 1.0,
            colsample_bytree: 1.0,
            gamma: 0.0,
            lambda: 1.0,
            early_stopping_rounds: 50,
        }
    }
}

impl GbdtConfig {
    fn validate(&self) -> Result<(), TreesError> {
        if self.n_estimators < 1 || self.n_estimators > 2000 {
            return Err(TreesError::BadParam(format!(
                "n_estimators {} outside 1..=2000",
                self.n_estimators
            )));
        }
        if self.max_depth < 1 || self.max_depth > 64 {
            return Err(TreesError::BadParam(format!(
                "max_depth {} outside 1..=64",
                self.max_depth
            )));
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(TreesError::BadParam(format!(
                "learning_rate {} must be positive",
                self.learning_rate
            )));
        }
        if !self.min_child_weight.is_finite() || self.min_child_weight < 0.0 {
            return Err(TreesError::BadParam(format!(
                "min_child_weight {} must be nonnegative",
                self.min_child_weight
            )));
        }
        for (name, frac) in [
            ("subsample", self.subsample),
            ("colsample_bytree", self.colsample_bytree),
        ] {
            if !frac.is_finite() || frac <= 0.0 || frac > 1.0 {
                return Err(TreesError::BadParam(format!(
                    "{name} {frac} outside (0, 1]"
                )));
            }
        }
        for (name, v) in [("gamma", self.gamma), ("lambda", self.lambda)] {
            if !v.is_finite() || v < 0.0 {
                return Err(TreesError::BadParam(format!(
                    "{name} {v} must be nonnegative"
                )));
            }
        }
        if self.early_stopping_rounds < 1 {
            return Err(TreesError::BadParam(
                "early_stopping_rounds must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

fn check_xy(x: ArrayView2<f64>, y: &Targets) -> Result<(usize, usize), TreesError> {
    let (n, m) = x.dim();
    if n < 2 {
        return Err(TreesError::TooFewSamples { need: 2, got: n });
    }
    if m == 0 {
        return Err(TreesError::BadParam("no feature columns".into()));
    }
    if y.len() != n {
        return Err(TreesError::Length(format!(
            "{} targets for {n} rows",
            y.len()
        )));
    }
    for ((row, col), &v) in x.indexed_iter() {
        if !v.is_finite() {
            return Err(TreesError::NonFiniteInput { row, col });
        }
    }
    if let Targets::Regression(values) = y {
        for (row, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(TreesError::NonFiniteInput {
                    row,
                    col: usize::MAX,
                });
            }
        }
    }
    Ok((n, m))
}

fn task_of(y: &Targets) -> Result<Task, TreesError> {
    match y {
        Targets::Regression(_) => Ok(Task::Regression),
        Targets::Classification(labels) => {
            let n_classes = labels.iter().max().map_or(0, |&c| c + 1);
            let mut seen = vec![false; n_classes];
            for &c in labels {
                seen[c] = true;
            }
            if seen.iter().filter(|&&s| s).count() < 2 {
                return Err(TreesError::SingleClass);
            }
            Ok(Task::Classification { n_classes })
        }
    }
}

fn argmax_tie_low(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Distinct indices in ascending order.
fn sample_columns(rng: &mut ChaCha8Rng, population: usize, count: usize) -> Vec<usize> {
    let mut chosen = index::sample(rng, population, count).into_vec();
    chosen.sort_unstable();
    chosen
}

/// Node rows ordered by one feature, ties by row index for
/// reproducibility.
fn sorted_by_feature(x: ArrayView2<f64>, indices: &[usize], feature: usize) -> Vec<(f64, usize)> {
    let mut pairs: Vec<(f64, usize)> = indices.iter().map(|&i| (x[[i, feature]], i)).collect();
    pairs.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    pairs
}

// ---------------------------------------------------------------------------
// Random forest

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
    pub task: Task,
    pub n_features: usize,
}

enum Criterion<'a> {
    Gini {
        labels: &'a [usize],
        n_classes: usize,
    },
    Variance {
        values: &'a [f64],
    },
}

impl Criterion<'_> {
    /// Impurity and leaf payload: class distribution or [mean].
    fn node_stats(&self, indices: &[usize]) -> (f64, Vec<f64>) {
        let n = indices.len() as f64;
        match self {
            Criterion::Gini { labels, n_classes } => {
                let mut counts = vec![0.0; *n_classes];
                for &i in indices {
                    counts[labels[i]] += 1.0;
                }
                let impurity = gini(&counts, n);
                let dist = counts.iter().map(|&c| c / n).collect();
                (impurity, dist)
            }
            Criterion::Variance { values } => {
                let sum: f64 = indices.iter().map(|&i| values[i]).sum();
                let mean = sum / n;
                let var = indices
                    .iter()
                    .map(|&i| (values[i] - mean) * (values[i] - mean))
                    .sum::<f64>()
                    / n;
                (var.max(0.0), vec![mean])
            }
        }
    }
}

fn gini(counts: &[f64], n: f64) -> f64 {
    1.0 - counts.iter().map(|&c| (c / n) * (c / n)).sum::<f64>()
}

struct ForestGrower<'a> {
    x: ArrayView2<'a, f64>,
    criterion: Criterion<'a>,
    cfg: &'a ForestConfig,
    features_per_split: usize,
    n_features: usize,
    rng: ChaCha8Rng,
    nodes: Vec<TreeNode>,
    /// Raw weighted-impurity-decrease totals per feature.
    importance: Vec<f64>,
    n_root: usize,
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    decrease: f64,
}

impl ForestGrower<'_> {
    fn grow(&mut self, indices: Vec<usize>, depth: usize) -> usize {
        let (impurity, value) = self.criterion.node_stats(&indices);
        let id = self.nodes.len();
        self.nodes.push(TreeNode::Leaf {
            n_samples: indices.len(),
            impurity,
            value,
        });
        if depth >= self.cfg.max_depth
            || indices.len() < self.cfg.min_samples_split
            || impurity <= 0.0
        {
            return id;
        }
        let candidates = sample_columns(&mut self.rng, self.n_features, self.features_per_split);
        let Some(best) = self.best_split(&indices, &candidates, impurity) else {
            return id;
        };
        let weight = indices.len() as f64 / self.n_root as f64;
        let gain = weight * best.decrease;
        self.importance[best.feature] += gain;
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = indices
            .iter()
            .partition(|&&i| self.x[[i, best.feature]] <= best.threshold);
        let n_samples = indices.len();
        drop(indices);
        let left = self.grow(left_rows, depth + 1);
        let right = self.grow(right_rows, depth + 1);
        self.nodes[id] = TreeNode::Split {
            n_samples,
            impurity,
            feature_index: best.feature,
            threshold: best.threshold,
            left,
            right,
            gain,
        };
        id
    }

    /// Scans candidate features in ascending order and keeps strictly
    /// better splits only, which breaks ties toward the lowest feature
    /// and threshold.
    fn best_split(
        &self,
        indices: &[usize],
        candidates: &[usize],
        node_impurity: f64,
    ) -> Option<SplitChoice> {
        let mut best: Option<SplitChoice> = None;
        for &feature in candidates {
            let sorted = sorted_by_feature(self.x, indices, feature);
            let found = match &self.criterion {
                Criterion::Gini { labels, n_classes } => {
                    self.scan_gini(&sorted, labels, *n_classes, node_impurity)
                }
                Criterion::Variance { values } => {
                    self.scan_variance(&sorted, values, node_impurity)
                }
            };
            if let Some((threshold, decrease)) = found {
                if best.as_ref().is_none_or(|b| decrease > b.decrease) {
                    best = Some(SplitChoice {
                        feature,
                        threshold,
                        decrease,
                    });
                }
            }
        }
        best.filter(|b| b.decrease > 0.0)
    }

    fn scan_gini(
        &self,
        sorted: &[(f64, usize)],
        labels: &[usize],
        n_classes: usize,
        node_impurity: f64,
    ) -> Option<(f64, f64)> {
        let n = sorted.len();
        let mut left = vec![0.0; n_classes];
        let mut right = vec![0.0; n_classes];
        for &(_, i) in sorted {
            right[labels[i]] += 1.0;
        }
        let mut best: Option<(f64, f64)> = None;
        for p in 1..n {
            let (prev_value, prev_row) = sorted[p - 1];
            left[labels[prev_row]] += 1.0;
            right[labels[prev_row]] -= 1.0;
            if prev_value >= sorted[p].0 {
                continue;
            }
            if p < self.cfg.min_samples_leaf || n - p < self.cfg.min_samples_leaf {
                continue;
            }
            let nl = p as f64;
            let nr = (n - p) as f64;
            let decrease =
                node_impurity - (nl * gini(&left, nl) + nr * gini(&right, nr)) / n as f64;
            if best.is_none_or(|(_, d)| decrease > d) {
                best = Some(((prev_value + sorted[p].0) / 2.0, decrease));
            }
        }
        best
    }

    fn scan_variance(
        &self,
        sorted: &[(f64, usize)],
        values: &[f64],
        node_impurity: f64,
    ) -> Option<(f64, f64)> {
        let n = sorted.len();
        let total_sum: f64 = sorted.iter().map(|&(_, i)| values[i]).sum();
        let total_sq: f64 = sorted.iter().map(|&(_, i)| values[i] * values[i]).sum();
        let mut left_sum = 0.0;
        let mut left_sq = 0.0;
        let mut best: Option<(f64, f64)> = None;
        for p in 1..n {
            let (prev_value, prev_row) = sorted[p - 1];
            left_sum += values[prev_row];
            left_sq += values[prev_row] * values[prev_row];
            if prev_value >= sorted[p].0 {
                continue;
            }
            if p < self.cfg.min_samples_leaf || n - p < self.cfg.min_samples_leaf {
                continue;
            }
            let nl = p as f64;
            let nr = (n - p) as f64;
            let var_l = (left_sq / nl - (left_sum / nl) * (left_sum / nl)).max(0.0);
            let right_sum = total_sum - left_sum;
            let right_sq = total_sq - left_sq;
            let var_r = (right_sq / nr - (right_sum / nr) * (right_sum / nr)).max(0.0);
            let decrease = node_impurity - (nl * var_l + nr * var_r) / n as f64;
            if best.is_none_or(|(_, d)| decrease > d) {
                best = Some(((prev_value + sorted[p].0) / 2.0, decrease));
            }
        }
        best
    }
}

/// Fits a bootstrap forest and scores features by mean decrease in
/// impurity, normalized to sum 1 across all features.
pub fn fit_forest(
    x: ArrayView2<f64>,
    y: &Targets,
    cfg: &ForestConfig,
    seed: u64,
) -> Result<(Forest, FeatureScores), TreesError> {
    cfg.validate()?;
    let (n, m) = check_xy(x, y)?;
    let task = task_of(y)?;
    let features_per_split = match task {
        Task::Classification { .. } => (m as f64).sqrt().ceil() as usize,
        Task::Regression => (m / 3).max(1),
    };
    let grown: Vec<(Tree, Vec<f64>)> = (0..cfg.n_estimators)
        .into_par_iter()
        .map(|t| {
            let mut rng = seeds::stream_rng(seed, "forest-tree", &[t as u64]);
            let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let criterion = match y {
                Targets::Classification(labels) => {
                    let Task::Classification { n_classes } = task else {
                        unreachable!()
                    };
                    Criterion::Gini { labels, n_classes }
                }
                Targets::Regression(values) => Criterion::Variance { values },
            };
            let mut grower = ForestGrower {
                x: x.view(),
                criterion,
                cfg,
                features_per_split,
                n_features: m,
                rng,
                nodes: Vec::new(),
                importance: vec![0.0; m],
                n_root: sample.len(),
            };
            grower.grow(sample, 0);
            (
                Tree {
                    nodes: grower.nodes,
                },
                grower.importance,
            )
        })
        .collect();

    let mut importance = vec![0.0; m];
    for (_, per_tree) in &grown {
        for (total, v) in importance.iter_mut().zip(per_tree) {
            *total += v;
        }
    }
    for v in &mut importance {
        *v /= cfg.n_estimators as f64;
    }
    let total: f64 = importance.iter().sum();
    if total > 0.0 {
        for v in &mut importance {
            *v /= total;
        }
    }
    let trees = grown.into_iter().map(|(tree, _)| tree).collect();
    let scores = FeatureScores::new(importance, "random_forest", "train")?;
    Ok((
        Forest {
            trees,
            task,
            n_features: m,
        },
        scores,
    ))
}

impl Forest {
    /// Majority vote over per-tree argmax labels (classification) or
    /// mean of leaf means (regression). Vote and argmax ties go to the
    /// lower class.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Targets, TreesError> {
        if x.ncols() != self.n_features {
            return Err(TreesError::FeatureMismatch {
                expected: self.n_features,
                got: x.ncols(),
            });
        }
        match self.task {
            Task::Regression => {
                let preds = x
                    .rows()
                    .into_iter()
                    .map(|row| {
                        self.trees.iter().map(|t| t.leaf_value(row)[0]).sum::<f64>()
                            / self.trees.len() as f64
                    })
                    .collect();
                Ok(Targets::Regression(preds))
            }
            Task::Classification { n_classes } => {
                let preds = x
                    .rows()
                    .into_iter()
                    .map(|row| {
                        let mut votes = vec![0.0; n_classes];
                        for tree in &self.trees {
                            votes[argmax_tie_low(tree.leaf_value(row))] += 1.0;
                        }
                        argmax_tie_low(&votes)
                    })
                    .collect();
                Ok(Targets::Classification(preds))
            }
        }
    }

    pub fn to_json(&self) -> Result<String, TreesError> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, TreesError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), TreesError> {
        Ok(std::fs::write(path, self.to_json()?)?)
    }

    pub fn load(path: &Path) -> Result<Self, TreesError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

// ---------------------------------------------------------------------------
// Gradient-boosted trees

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gbdt {
    pub task: Task,
    pub n_features: usize,
    pub learning_rate: f64,
    /// Raw-score offset per output: target mean for regression, zero
    /// logits for classification. Length 1 except for multiclass.
    pub base: Vec<f64>,
    /// One tree per output per kept boosting round.
    pub rounds: Vec<Vec<Tree>>,
}

/// Regularized objective gain of a candidate split.
pub(crate) fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, lambda: f64, gamma: f64) -> f64 {
    let part = |g: f64, h: f64| g * g / (h + lambda).max(DENOM_FLOOR);
    0.5 * (part(gl, hl) + part(gr, hr) - part(gl + gr, hl + hr)) - gamma
}

struct GbdtGrower<'a, 'b> {
    x: ArrayView2<'a, f64>,
    g: &'b [f64],
    h: &'b [f64],
    columns: &'b [usize],
    cfg: &'a GbdtConfig,
    nodes: Vec<TreeNode>,
}

impl GbdtGrower<'_, '_> {
    fn grow(&mut self, indices: Vec<usize>, depth: usize) -> usize {
        let g_sum: f64 = indices.iter().map(|&i| self.g[i]).sum();
        let h_sum: f64 = indices.iter().map(|&i| self.h[i]).sum();
        let denom = (h_sum + self.cfg.lambda).max(DENOM_FLOOR);
        let id = self.nodes.len();
        self.nodes.push(TreeNode::Leaf {
            n_samples: indices.len(),
            impurity: -0.5 * g_sum * g_sum / denom,
            value: vec![-g_sum / denom],
        });
        if depth >= self.cfg.max_depth || indices.len() < 2 {
            return id;
        }
        let Some(best) = self.best_split(&indices, g_sum, h_sum) else {
            return id;
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = indices
            .iter()
            .partition(|&&i| self.x[[i, best.feature]] <= best.threshold);
        let n_samples = indices.len();
        let impurity = -0.5 * g_sum * g_sum / denom;
        drop(indices);
        let left = self.grow(left_rows, depth + 1);
        let right = self.grow(right_rows, depth + 1);
        self.nodes[id] = TreeNode::Split {
            n_samples,
            impurity,
            feature_index: best.feature,
            threshold: best.threshold,
            left,
            right,
            gain: best.decrease,
        };
        id
    }

    fn best_split(&self, indices: &[usize], g_sum: f64, h_sum: f64) -> Option<SplitChoice> {
        let mut best: Option<SplitChoice> = None;
        for &feature in self.columns {
            let sorted = sorted_by_feature(self.x, indices, feature);
            let n = sorted.len();
            let mut g_left = 0.0;
            let mut h_left = 0.0;
            for p in 1..n {
                let (prev_value, prev_row) = sorted[p - 1];
                g_left += self.g[prev_row];
                h_left += self.h[prev_row];
                if prev_value >= sorted[p].0 {
                    continue;
                }
                let h_right = h_sum - h_left;
                if h_left < self.cfg.min_child_weight || h_right < self.cfg.min_child_weight {
                    continue;
                }
                let gain = split_gain(
                    g_left,
                    h_left,
                    g_sum - g_left,
                    h_right,
                    self.cfg.lambda,
                    self.cfg.gamma,
                );
                if gain > best.as_ref().map_or(0.0, |b| b.decrease) {
                    best = Some(SplitChoice {
                        feature,
                        threshold: (prev_value + sorted[p].0) / 2.0,
                        decrease: gain,
                    });
                }
            }
        }
        best
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softmax_row(raw: &[f64]) -> Vec<f64> {
    let max = raw.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let exps: Vec<f64> = raw.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}

/// Loss the early stopping watches: mean squared error or log loss.
fn holdout_loss(raw: &Array2<f64>, y: &Targets, task: Task) -> f64 {
    let n = raw.nrows() as f64;
    match (task, y) {
        (Task::Regression, Targets::Regression(values)) => {
            let mut total = 0.0;
            for (i, &v) in values.iter().enumerate() {
                let d = raw[[i, 0]] - v;
                total += d * d;
            }
            total / n
        }
        (Task::Classification { n_classes: 2 }, Targets::Classification(labels))
            if raw.ncols() == 1 =>
        {
            let mut total = 0.0;
            for (i, &c) in labels.iter().enumerate() {
                let p = sigmoid(raw[[i, 0]]).clamp(1e-15, 1.0 - 1e-15);
                total -= if c == 1 { p.ln() } else { (1.0 - p).ln() };
            }
            total / n
        }
        (Task::Classification { .. }, Targets::Classification(labels)) => {
            let mut total = 0.0;
            for (i, &c) in labels.iter().enumerate() {
                let probs = softmax_row(raw.row(i).to_slice().unwrap());
                total -= probs[c].max(1e-300).ln();
            }
            total / n
        }
        _ => unreachable!("task checked against targets upstream"),
    }
}

/// Gradient and hessian of the round's loss at the current raw scores,
/// one column per output.
fn gradients(raw: &Array2<f64>, y: &Targets, task: Task) -> (Array2<f64>, Array2<f64>) {
    let n = raw.nrows();
    match (task, y) {
        (Task::Regression, Targets::Regression(values)) => {
            let mut g = Array2::zeros((n, 1));
            for (i, &v) in values.iter().enumerate() {
                g[[i, 0]] = raw[[i, 0]] - v;
            }
            (g, Array2::ones((n, 1)))
        }
        (Task::Classification { n_classes: 2 }, Targets::Classification(labels))
            if raw.ncols() == 1 =>
        {
            let mut g = Array2::zeros((n, 1));
            let mut h = Array2::zeros((n, 1));
            for (i, &c) in labels.iter().enumerate() {
                let p = sigmoid(raw[[i, 0]]);
                g[[i, 0]] = p - c as f64;
                h[[i, 0]] = p * (1.0 - p);
            }
            (g, h)
        }
        (Task::Classification { n_classes }, Targets::Classification(labels)) => {
            let mut g = Array2::zeros((n, n_classes));
            let mut h = Array2::zeros((n, n_classes));
            for (i, &label) in labels.iter().enumerate() {
                let probs = softmax_row(raw.row(i).to_slice().unwrap());
                for c in 0..n_classes {
                    let p = probs[c];
                    g[[i, c]] = p - if c == label { 1.0 } else { 0.0 };
                    h[[i, c]] = p * (1.0 - p);
                }
            }
            (g, h)
        }
        _ => unreachable!("task checked against targets upstream"),
    }
}

/// Fits a second-order boosted ensemble with early stopping on the
/// holdout split, truncating to the best round. Features are scored by
/// mean split gain, normalized to sum 1.
pub fn fit_gbdt(
    x: ArrayView2<f64>,
    y: &Targets,
    cfg: &GbdtConfig,
    seed: u64,
    x_val: ArrayView2<f64>,
    y_val: &Targets,
) -> Result<(Gbdt, FeatureScores), TreesError> {
    cfg.validate()?;
    let (n, m) = check_xy(x, y)?;
    let task = task_of(y)?;
    if x_val.ncols() != m {
        return Err(TreesError::FeatureMismatch {
            expected: m,
            got: x_val.ncols(),
        });
    }
    if x_val.nrows() == 0 || x_val.nrows() != y_val.len() {
        return Err(TreesError::Length(format!(
            "holdout has {} rows and {} targets",
            x_val.nrows(),
            y_val.len()
        )));
    }
    match (task, y_val) {
        (Task::Regression, Targets::Regression(_)) => {}
        (Task::Classification { n_classes }, Targets::Classification(labels)) => {
            if labels.iter().any(|&c| c >= n_classes) {
                return Err(TreesError::Length(
                    "holdout label outside training classes".into(),
                ));
            }
        }
        _ => {
            return Err(TreesError::Length(
                "holdout task does not match training task".into(),
            ))
        }
    }
    for ((row, col), &v) in x_val.indexed_iter() {
        if !v.is_finite() {
            return Err(TreesError::NonFiniteInput { row, col });
        }
    }

    let (n_outputs, base) = match (task, y) {
        (Task::Regression, Targets::Regression(values)) => {
            (1, vec![values.iter().sum::<f64>() / n as f64])
        }
        (Task::Classification { n_classes: 2 }, _) => (1, vec![0.0]),
        (Task::Classification { n_classes }, _) => (n_classes, vec![0.0; n_classes]),
        _ => unreachable!("task derived from targets"),
    };

    let mut raw = Array2::from_shape_fn((n, n_outputs), |(_, c)| base[c]);
    let mut raw_val = Array2::from_shape_fn((x_val.nrows(), n_outputs), |(_, c)| base[c]);
    let row_count = ((cfg.subsample * n as f64).round() as usize).clamp(1, n);
    let col_count = ((cfg.colsample_bytree * m as f64).round() as usize).clamp(1, m);

    let mut rounds: Vec<Vec<Tree>> = Vec::new();
    let mut best_loss = f64::INFINITY;
    let mut best_round = 0;
    for round in 0..cfg.n_estimators {
        let (g, h) = gradients(&raw, y, task);
        if g.iter().chain(h.iter()).any(|v| !v.is_finite()) {
            return Err(TreesError::NonFiniteGradient { round });
        }
        let mut round_trees = Vec::with_capacity(n_outputs);
        for out in 0..n_outputs {
            let mut row_rng = seeds::stream_rng(seed, "gbdt-rows", &[round as u64, out as u64]);
            let rows = if row_count == n {
                (0..n).collect()
            } else {
                let mut rows = index::sample(&mut row_rng, n, row_count).into_vec();
                rows.sort_unstable();
                rows
            };
            let mut col_rng = seeds::stream_rng(seed, "gbdt-cols", &[round as u64, out as u64]);
            let columns = if col_count == m {
                (0..m).collect()
            } else {
                sample_columns(&mut col_rng, m, col_count)
            };
            let g_col: Vec<f64> = g.column(out).to_vec();
            let h_col: Vec<f64> = h.column(out).to_vec();
            let mut grower = GbdtGrower {
                x: x.view(),
                g: &g_col,
                h: &h_col,
                columns: &columns,
                cfg,
                nodes: Vec::new(),
            };
            grower.grow(rows, 0);
            let tree = Tree {
                nodes: grower.nodes,
            };
            for (i, row) in x.rows().into_iter().enumerate() {
                raw[[i, out]] += cfg.learning_rate * tree.leaf_value(row)[0];
            }
            for (i, row) in x_val.rows().into_iter().enumerate() {
                raw_val[[i, out]] += cfg.learning_rate * tree.leaf_value(row)[0];
            }
            round_trees.push(tree);
        }
        rounds.push(round_trees);

        let loss = holdout_loss(&raw_val, y_val, task);
        if loss < best_loss {
            best_loss = loss;
            best_round = round;
        } else if round - best_round >= cfg.early_stopping_rounds {
            break;
        }
    }
    rounds.truncate(best_round + 1);

    let mut gain_total = vec![0.0; m];
    let mut gain_count = vec![0usize; m];
    for tree in rounds.iter().flatten() {
        for node in &tree.nodes {
            if let TreeNode::Split {
                feature_index,
                gain,
                ..
            } = node
            {
                gain_total[*feature_index] += gain;
                gain_count[*feature_index] += 1;
            }
        }
    }
    let mut importance: Vec<f64> = gain_total
        .iter()
        .zip(&gain_count)
        .map(|(&total, &count)| if count > 0 { total / count as f64 } else { 0.0 })
        .collect();
    let total: f64 = importance.iter().sum();
    if total > 0.0 {
        for v in &mut importance {
            *v /= total;
        }
    }
    let scores = FeatureScores::new(importance, "gbdt", "train")?;
    Ok((
        Gbdt {
            task,
            n_features: m,
            learning_rate: cfg.learning_rate,
            base,
            rounds,
        },
        scores,
    ))
}

impl Gbdt {
    /// Raw additive scores before any link: base + lr * tree outputs.
    pub fn predict_raw(&self, x: ArrayView2<f64>) -> Result<Array2<f64>, TreesError> {
        if x.ncols() != self.n_features {
            return Err(TreesError::FeatureMismatch {
                expected: self.n_features,
                got: x.ncols(),
            });
        }
        let n_outputs = self.base.len();
        let mut raw = Array2::from_shape_fn((x.nrows(), n_outputs), |(_, c)| self.base[c]);
        for round in &self.rounds {
            for (out, tree) in round.iter().enumerate() {
                for (i, row) in x.rows().into_iter().enumerate() {
                    raw[[i, out]] += self.learning_rate * tree.leaf_value(row)[0];
                }
            }
        }
        Ok(raw)
    }

    /// Predictions through the link: identity, logit threshold at 0,
    /// or softmax argmax with ties to the lower class.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Targets, TreesError> {
        let raw = self.predict_raw(x)?;
        match self.task {
            Task::Regression => Ok(Targets::Regression(raw.column(0).to_vec())),
            Task::Classification { .. } if self.base.len() == 1 => {
                let labels = raw
                    .column(0)
                    .iter()
                    .map(|&z| usize::from(z > 0.0))
                    .collect();
                Ok(Targets::Classification(labels))
            }
            Task::Classification { .. } => {
                let labels = raw
                    .rows()
                    .into_iter()
                    .map(|row| argmax_tie_low(row.to_slice().unwrap()))
                    .collect();
                Ok(Targets::Classification(labels))
            }
        }
    }

    pub fn to_json(&self) -> Result<String, TreesError> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, TreesError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), TreesError> {
        Ok(std::fs::write(path, self.to_json()?)?)
    }

    pub fn load(path: &Path) -> Result<Self, TreesError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds::stream_rng;
    use ndarray::Array2;
    use rand_distr::{Distribution, StandardNormal};

    fn design(n: usize, m: usize, seed: u64) -> Array2<f64> {
        let mut rng = stream_rng(seed, "trees-test-design", &[]);
        Array2::from_shape_fn((n, m), |_| StandardNormal.sample(&mut rng))
    }

    fn step_labels(x: &Array2<f64>, feature: usize) -> Targets {
        Targets::Classification(
            (0..x.nrows())
                .map(|i| usize::from(x[[i, feature]] > 0.0))
                .collect(),
        )
    }

    #[test]
    fn informative_feature_takes_most_importance() {
        let x = design(1000, 2, 1);
        let y = step_labels(&x, 0);
        let cfg = ForestConfig {
            n_estimators: 20,
            max_depth: 6,
            ..ForestConfig::default()
        };
        let (_, scores) = fit_forest(x.view(), &y, &cfg, 3).unwrap();
        assert!(scores.scores[0] > 0.8, "scores = {:?}", scores.scores);
        let sum: f64 = scores.scores.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_feature_gets_zero_importance() {
        let mut x = design(300, 2, 2);
        x.column_mut(1).fill(7.0);
        let y = step_labels(&x, 0);
        let cfg = ForestConfig {
            n_estimators: 10,
            max_depth: 5,
            ..ForestConfig::default()
        };
        let (_, scores) = fit_forest(x.view(), &y, &cfg, 4).unwrap();
        assert_eq!(scores.scores[1], 0.0);
    }

    #[test]
    fn regression_forest_on_constant_target_predicts_it() {
        let x = design(50, 2, 5);
        let y = Targets::Regression(vec![3.5; 50]);
        let cfg = ForestConfig {
            n_estimators: 5,
            max_depth: 4,
            ..ForestConfig::default()
        };
        let (forest, scores) = fit_forest(x.view(), &y, &cfg, 6).unwrap();
        let Targets::Regression(preds) = forest.predict(x.view()).unwrap() else {
            panic!("regression forest must predict numbers")
        };
        assert!(preds.iter().all(|&p| p == 3.5));
        assert!(scores.scores.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn single_class_target_rejected() {
        let x = design(20, 2, 7);
        let y = Targets::Classification(vec![1; 20]);
        assert!(matches!(
            fit_forest(x.view(), &y, &ForestConfig::default(), 0),
            Err(TreesError::SingleClass)
        ));
    }

    #[test]
    fn forest_fit_is_seed_deterministic() {
        let x = design(200, 3, 8);
        let y = step_labels(&x, 1);
        let cfg = ForestConfig {
            n_estimators: 8,
            max_depth: 5,
            ..ForestConfig::default()
        };
        let (fa, sa) = fit_forest(x.view(), &y, &cfg, 11).unwrap();
        let (fb, sb) = fit_forest(x.view(), &y, &cfg, 11).unwrap();
        assert_eq!(fa, fb);
        assert_eq!(sa.scores, sb.scores);
        let (_, sc) = fit_forest(x.view(), &y, &cfg, 12).unwrap();
        assert_ne!(sa.scores, sc.scores);
    }

    #[test]
    fn permuting_columns_permutes_importances() {
        // Both features enter every split (ceil sqrt 2 = 2), so the
        // only column dependence is the split search itself.
        let x = design(300, 2, 9);
        let y = {
            let Targets::Classification(labels) = step_labels(&x, 0) else {
                unreachable!()
            };
            Targets::Classification(
                labels
                    .iter()
                    .enumerate()
                    .map(|(i, &l)| if x[[i, 1]] > 1.0 { 1 - l } else { l })
                    .collect(),
            )
        };
        let cfg = ForestConfig {
            n_estimators: 6,
            max_depth: 4,
            ..ForestConfig::default()
        };
        let (_, original) = fit_forest(x.view(), &y, &cfg, 13).unwrap();
        let swapped = {
            let mut s = Array2::zeros(x.raw_dim());
            s.column_mut(0).assign(&x.column(1));
            s.column_mut(1).assign(&x.column(0));
            s
        };
        let (_, permuted) = fit_forest(swapped.view(), &y, &cfg, 13).unwrap();
        assert!((original.scores[0] - permuted.scores[1]).abs() < 1e-12);
        assert!((original.scores[1] - permuted.scores[0]).abs() < 1e-12);
    }

    #[test]
    fn every_forest_split_decreases_weighted_impurity() {
        let x = design(400, 3, 10);
        let y = step_labels(&x, 2);
        let cfg = ForestConfig {
            n_estimators: 5,
            max_depth: 6,
            ..ForestConfig::default()
        };
        let (forest, _) = fit_forest(x.view(), &y, &cfg, 14).unwrap();
        for tree in &forest.trees {
            for node in &tree.nodes {
                if let TreeNode::Split {
                    n_samples,
                    impurity,
                    left,
                    right,
                    gain,
                    ..
                } = node
                {
                    let stats = |id: usize| match &tree.nodes[id] {
                        TreeNode::Leaf {
                            n_samples,
                            impurity,
                            ..
                        }
                        | TreeNode::Split {
                            n_samples,
                            impurity,
                            ..
                        } => (*n_samples, *impurity),
                    };
                    let (nl, il) = stats(*left);
                    let (nr, ir) = stats(*right);
                    assert_eq!(nl + nr, *n_samples);
                    let weighted_children = (nl as f64 * il + nr as f64 * ir) / *n_samples as f64;
                    assert!(impurity - weighted_children > 0.0);
                    assert!(*gain > 0.0);
                }
            }
        }
    }

    #[test]
    fn duplicated_feature_keeps_its_importance_mass() {
        // Importance mass may split between the two copies, but their
        // sum should stay close to the single-copy importance.
        let mut dup_sum = 0.0;
        let mut single_sum = 0.0;
        for seed in 0..20 {
            let x = design(300, 2, 100 + seed);
            let y = step_labels(&x, 0);
            let cfg = ForestConfig {
                n_estimators: 10,
                max_depth: 5,
                ..ForestConfig::default()
            };
            let mut with_dup = Array2::zeros((300, 3));
            with_dup.column_mut(0).assign(&x.column(0));
            with_dup.column_mut(1).assign(&x.column(0));
            with_dup.column_mut(2).assign(&x.column(1));
            let (_, dup) = fit_forest(with_dup.view(), &y, &cfg, 200 + seed).unwrap();
            let (_, single) = fit_forest(x.view(), &y, &cfg, 200 + seed).unwrap();
            dup_sum += dup.scores[0] + dup.scores[1];
            single_sum += single.scores[0];
        }
        assert!(
            dup_sum / 20.0 >= 0.9 * single_sum / 20.0,
            "dup mean {}, single mean {}",
            dup_sum / 20.0,
            single_sum / 20.0
        );
    }

    #[test]
    fn vote_tie_goes_to_lower_class() {
        let leaf = |dist: Vec<f64>| Tree {
            nodes: vec![TreeNode::Leaf {
                n_samples: 1,
                impurity: 0.0,
                value: dist,
            }],
        };
        let forest = Forest {
            trees: vec![leaf(vec![1.0, 0.0]), leaf(vec![0.0, 1.0])],
            task: Task::Classification { n_classes: 2 },
            n_features: 1,
        };
        let x = Array2::zeros((3, 1));
        let Targets::Classification(preds) = forest.predict(x.view()).unwrap() else {
            panic!("classification forest must predict labels")
        };
        assert_eq!(preds, vec![0, 0, 0]);
    }

    #[test]
    fn identical_stump_votes_match_single_stump() {
        let stump = Tree {
            nodes: vec![
                TreeNode::Split {
                    n_samples: 2,
                    impurity: 0.5,
                    feature_index: 0,
                    threshold: 0.0,
                    left: 1,
                    right: 2,
                    gain: 0.5,
                },
                TreeNode::Leaf {
                    n_samples: 1,
                    impurity: 0.0,
                    value: vec![1.0, 0.0],
                },
                TreeNode::Leaf {
                    n_samples: 1,
                    impurity: 0.0,
                    value: vec![0.0, 1.0],
                },
            ],
        };
        let single = Forest {
            trees: vec![stump.clone()],
            task: Task::Classification { n_classes: 2 },
            n_features: 1,
        };
        let five = Forest {
            trees: vec![stump; 5],
            task: Task::Classification { n_classes: 2 },
            n_features: 1,
        };
        let x = ndarray::arr2(&[[-1.0], [0.5], [2.0]]);
        assert_eq!(
            single.predict(x.view()).unwrap(),
            five.predict(x.view()).unwrap()
        );
    }

    #[test]
    fn forest_serialization_round_trips() {
        let x = design(60, 2, 15);
        let y = step_labels(&x, 0);
        let cfg = ForestConfig {
            n_estimators: 3,
            max_depth: 3,
            ..ForestConfig::default()
        };
        let (forest, _) = fit_forest(x.view(), &y, &cfg, 16).unwrap();
        let restored = Forest::from_json(&forest.to_json().unwrap()).unwrap();
        assert_eq!(forest, restored);
    }

    #[test]
    fn forest_config_validated() {
        let x = design(20, 2, 17);
        let y = step_labels(&x, 0);
        let cfg = ForestConfig {
            n_estimators: 0,
            ..ForestConfig::default()
        };
        assert!(matches!(
            fit_forest(x.view(), &y, &cfg, 0),
            Err(TreesError::BadParam(_))
        ));
    }

    #[test]
    fn gain_formula_oracle() {
        assert_eq!(split_gain(2.0, 1.0, -2.0, 1.0, 1.0, 0.0), 2.0);
        assert_eq!(split_gain(2.0, 1.0, -2.0, 1.0, 1.0, 0.5), 1.5);
    }

    fn holdout(x: &Array2<f64>, y: &Targets) -> (Array2<f64>, Targets) {
        (x.clone(), y.clone())
    }

    #[test]
    fn single_stump_importance_is_one() {
        let x = design(100, 1, 20);
        let y = Targets::Regression((0..100).map(|i| f64::from(x[[i, 0]] > 0.0)).collect());
        let cfg = GbdtConfig {
            n_estimators: 1,
            max_depth: 1,
            learning_rate: 1.0,
            lambda: 0.0,
            min_child_weight: 0.0,
            ..GbdtConfig::default()
        };
        let (model, scores) = fit_gbdt(x.view(), &y, &cfg, 1, x.view(), &y).unwrap();
        assert_eq!(scores.scores, vec![1.0]);
        assert_eq!(model.rounds.len(), 1);
        assert_eq!(model.rounds[0][0].depth(), 1);
    }

    #[test]
    fn huge_lambda_blocks_all_splits() {
        let x = design(150, 2, 21);
        let y = Targets::Regression((0..150).map(|i| x[[i, 0]]).collect());
        let cfg = GbdtConfig {
            n_estimators: 10,
            gamma: 0.1,
            lambda: 1e12,
            ..GbdtConfig::default()
        };
        let (val_x, val_y) = holdout(&x, &y);
        let (model, scores) = fit_gbdt(x.view(), &y, &cfg, 2, val_x.view(), &val_y).unwrap();
        assert!(model.rounds.iter().flatten().all(|tree| tree.depth() == 0));
        assert!(scores.scores.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn empty_ensemble_predicts_base_score() {
        let model = Gbdt {
            task: Task::Regression,
            n_features: 2,
            learning_rate: 0.3,
            base: vec![2.5],
            rounds: vec![],
        };
        let x = Array2::zeros((4, 2));
        let Targets::Regression(preds) = model.predict(x.view()).unwrap() else {
            panic!("regression model must predict numbers")
        };
        assert_eq!(preds, vec![2.5; 4]);
    }

    #[test]
    fn identical_stump_rounds_sum_before_link() {
        let stump = Tree {
            nodes: vec![
                TreeNode::Split {
                    n_samples: 2,
                    impurity: 0.0,
                    feature_index: 0,
                    threshold: 0.0,
                    left: 1,
                    right: 2,
                    gain: 1.0,
                },
                TreeNode::Leaf {
                    n_samples: 1,
                    impurity: 0.0,
                    value: vec![-1.0],
                },
                TreeNode::Leaf {
                    n_samples: 1,
                    impurity: 0.0,
                    value: vec![2.0],
                },
            ],
        };
        let model = Gbdt {
            task: Task::Regression,
            n_features: 1,
            learning_rate: 1.0,
            base: vec![0.0],
            rounds: vec![vec![stump.clone()], vec![stump.clone()], vec![stump]],
        };
        let x = ndarray::arr2(&[[-0.5], [0.5]]);
        let raw = model.predict_raw(x.view()).unwrap();
        assert_eq!(raw[[0, 0]], -3.0);
        assert_eq!(raw[[1, 0]], 6.0);
    }

    #[test]
    fn binary_classification_learns_the_split() {
        let x = design(400, 2, 22);
        let y = step_labels(&x, 0);
        let x_val = design(200, 2, 23);
        let y_val = step_labels(&x_val, 0);
        let cfg = GbdtConfig {
            n_estimators: 60,
            max_depth: 3,
            ..GbdtConfig::default()
        };
        let (model, scores) = fit_gbdt(x.view(), &y, &cfg, 3, x_val.view(), &y_val).unwrap();
        let Targets::Classification(preds) = model.predict(x_val.view()).unwrap() else {
            panic!("classification model must predict labels")
        };
        let Targets::Classification(truth) = y_val else {
            unreachable!()
        };
        let correct = preds.iter().zip(&truth).filter(|(a, b)| a == b).count();
        assert!(
            correct as f64 / 200.0 > 0.9,
            "accuracy {}",
            correct as f64 / 200.0
        );
        assert!(scores.scores[0] > scores.scores[1]);
    }

    #[test]
    fn early_stopping_truncates_to_best_round() {
        let x = design(80, 2, 24);
        let y = Targets::Regression(vec![1.0; 80]);
        let cfg = GbdtConfig {
            n_estimators: 500,
            early_stopping_rounds: 50,
            ..GbdtConfig::default()
        };
        let (model, _) = fit_gbdt(x.view(), &y, &cfg, 4, x.view(), &y).unwrap();
        // Constant target: round one fits it exactly and nothing can
        // improve, so the kept ensemble is a single round.
        assert_eq!(model.rounds.len(), 1);
    }

    #[test]
    fn multiclass_grows_one_tree_per_class() {
        let x = design(120, 2, 25);
        let y = Targets::Classification(
            (0..120)
                .map(|i| {
                    let v = x[[i, 0]];
                    if v < -0.4 {
                        0
                    } else if v < 0.4 {
                        1
                    } else {
                        2
                    }
                })
                .collect(),
        );
        let cfg = GbdtConfig {
            n_estimators: 3,
            max_depth: 3,
            ..GbdtConfig::default()
        };
        let (model, _) = fit_gbdt(x.view(), &y, &cfg, 5, x.view(), &y).unwrap();
        assert!(model.rounds.iter().all(|round| round.len() == 3));
    }

    #[test]
    fn gbdt_fit_is_seed_deterministic() {
        let x = design(150, 3, 26);
        let y = step_labels(&x, 1);
        let cfg = GbdtConfig {
            n_estimators: 10,
            max_depth: 3,
            subsample: 0.7,
            colsample_bytree: 0.7,
            ..GbdtConfig::default()
        };
        let (ma, sa) = fit_gbdt(x.view(), &y, &cfg, 31, x.view(), &y).unwrap();
        let (mb, sb) = fit_gbdt(x.view(), &y, &cfg, 31, x.view(), &y).unwrap();
        assert_eq!(ma, mb);
        assert_eq!(sa.scores, sb.scores);
    }

    #[test]
    fn gbdt_serialization_round_trips() {
        let x = design(60, 2, 27);
        let y = step_labels(&x, 0);
        let cfg = GbdtConfig {
            n_estimators: 3,
            max_depth: 2,
            ..GbdtConfig::default()
        };
        let (model, _) = fit_gbdt(x.view(), &y, &cfg, 6, x.view(), &y).unwrap();
        let restored = Gbdt::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(model, restored);
    }

    #[test]
    fn gbdt_config_validated() {
        let x = design(20, 2, 28);
        let y = step_labels(&x, 0);
        for cfg in [
            GbdtConfig {
                subsample: 0.0,
                ..GbdtConfig::default()
            },
            GbdtConfig {
                colsample_bytree: 1.5,
                ..GbdtConfig::default()
            },
            GbdtConfig {
                lambda: -1.0,
                ..GbdtConfig::default()
            },
            GbdtConfig {
                learning_rate: 0.0,
                ..GbdtConfig::default()
            },
        ] {
            assert!(matches!(
                fit_gbdt(x.view(), &y, &cfg, 0, x.view(), &y),
                Err(TreesError::BadParam(_))
            ));
        }
    }

    #[test]
    fn non_finite_input_rejected() {
        let mut x = design(20, 2, 29);
        x[[3, 1]] = f64::NAN;
        let y = Targets::Regression(vec![0.0; 20]);
        assert!(matches!(
            fit_forest(x.view(), &y, &ForestConfig::default(), 0),
            Err(TreesError::NonFiniteInput { row: 3, col: 1 })
        ));
    }

    #[test]
    fn predict_checks_feature_count() {
        let x = design(30, 2, 30);
        let y = step_labels(&x, 0);
        let cfg = ForestConfig {
            n_estimators: 2,
            max_depth: 2,
            ..ForestConfig::default()
        };
        let (forest, _) = fit_forest(x.view(), &y, &cfg, 7).unwrap();
        let wrong = Array2::zeros((5, 3));
        assert!(matches!(
            forest.predict(wrong.view()),
            Err(TreesError::FeatureMismatch {
                expected: 2,
                got: 3
            })
        ));
    }
}
