//! Evaluation statistics: downstream metrics, ranking agreement
//! between selectors, rank-sum significance tests, and the grouped
//! rank assignment used to summarize methods across datasets.
//!
//! Everything here is a pure function of its inputs. The Wilcoxon
//! test switches from exact subset enumeration to a tie-corrected
//! normal approximation once the combined sample exceeds 20 values.

use ndarray::Array2;
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::data::Targets;
use crate::selectors::{select_top_k, FeatureScores, FsError};

/// Combined sample size up to which the rank-sum null distribution is
/// enumerated exactly.
const EXACT_LIMIT: usize = 20;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("length mismatch: {0}")]
    Length(String),
    #[error("need at least {need} values, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("non-finite value at position {0}")]
    NonFinite(usize),
    #[error("rank correlation undefined for a constant vector")]
    ConstantVector,
    #[error("mask needs both original and extraneous features")]
    SingleClassMask,
    #[error("predictions and targets disagree on the task")]
    TaskMismatch,
    #[error(transparent)]
    Scores(#[from] FsError),
}

/// Which end of the metric scale is better.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Maximize,
    Minimize,
}

fn check_finite(values: &[f64]) -> Result<(), StatsError> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(StatsError::NonFinite(i)),
        None => Ok(()),
    }
}

/// 1-based ranks with ties sharing the average of their positions:
/// [10, 20, 20] becomes [1.0, 2.5, 2.5].
pub(crate) fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Positions start..end are tied; each gets the mean position.
        let rank = (start + 1 + end) as f64 / 2.0;
        for &index in &order[start..end] {
            ranks[index] = rank;
        }
        start = end;
    }
    ranks
}

/// Rank correlation: Pearson correlation of the midranked vectors.
/// A vector with all values tied has no usable ranking.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::Length(format!(
            "{} values vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(StatsError::TooFewSamples {
            need: 2,
            got: a.len(),
        });
    }
    check_finite(a)?;
    check_finite(b)?;
    let ra = midranks(a);
    let rb = midranks(b);
    let n = ra.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - mean) * (y - mean);
        var_a += (x - mean) * (x - mean);
        var_b += (y - mean) * (y - mean);
    }
    if var_a == 0.0 || var_b == 0.0 {
        return Err(StatsError::ConstantVector);
    }
    Ok(cov / (var_a * var_b).sqrt())
}

/// Pairwise rank correlation of importance vectors from one dataset.
/// Entry (a, b) is the correlation between methods a and b; the
/// diagonal is exactly 1.
pub fn similarity_matrix(methods: &[FeatureScores]) -> Result<Array2<f64>, StatsError> {
    if methods.is_empty() {
        return Err(StatsError::TooFewSamples { need: 1, got: 0 });
    }
    let k = methods.len();
    let mut matrix = Array2::zeros((k, k));
    for a in 0..k {
        matrix[[a, a]] = 1.0;
        for b in a + 1..k {
            let rho = spearman(&methods[a].scores, &methods[b].scores)?;
            matrix[[a, b]] = rho;
            matrix[[b, a]] = rho;
        }
    }
    Ok(matrix)
}

/// Elementwise mean of per-dataset similarity matrices.
pub fn average_matrices(matrices: &[Array2<f64>]) -> Result<Array2<f64>, StatsError> {
    let first = matrices
        .first()
        .ok_or(StatsError::TooFewSamples { need: 1, got: 0 })?;
    let mut total = Array2::zeros(first.raw_dim());
    for matrix in matrices {
        if matrix.dim() != first.dim() {
            return Err(StatsError::Length(format!(
                "matrix {:?} vs {:?}",
                matrix.dim(),
                first.dim()
            )));
        }
        total += matrix;
    }
    Ok(total / matrices.len() as f64)
}

/// Sum of the ranks that sample `a` receives when both samples are
/// midranked together.
fn rank_sum_statistic(a: &[f64], b: &[f64]) -> (f64, Vec<f64>) {
    let mut combined = Vec::with_capacity(a.len() + b.len());
    combined.extend_from_slice(a);
    combined.extend_from_slice(b);
    let ranks = midranks(&combined);
    let w = ranks[..a.len()].iter().sum();
    (w, ranks)
}

/// Exact P(W >= observed) over all ways to deal `n_a` of the combined
/// ranks to sample a. Recursion over include/exclude of each rank.
fn exact_tail(ranks: &[f64], n_a: usize, observed: f64) -> f64 {
    fn walk(
        ranks: &[f64],
        index: usize,
        left: usize,
        sum: f64,
        observed: f64,
        hits: &mut u64,
        total: &mut u64,
    ) {
        if left == 0 {
            *total += 1;
            // Observed is an exact sum of the same midranks, so the
            // comparison is safe up to a hair of slack.
            if sum >= observed - 1e-9 {
                *hits += 1;
            }
            return;
        }
        if ranks.len() - index < left {
            return;
        }
        walk(
            ranks,
            index + 1,
            left - 1,
            sum + ranks[index],
            observed,
            hits,
            total,
        );
        walk(ranks, index + 1, left, sum, observed, hits, total);
    }
    let mut hits = 0;
    let mut total = 0;
    walk(ranks, 0, n_a, 0.0, observed, &mut hits, &mut total);
    hits as f64 / total as f64
}

/// Normal approximation with midrank tie correction and a 0.5
/// continuity correction. A fully tied sample is degenerate: W always
/// equals its mean, so the tail probability is 1.
fn approx_tail(ranks: &[f64], n_a: usize, observed: f64) -> f64 {
    let n = ranks.len() as f64;
    let na = n_a as f64;
    let nb = n - na;
    let mean = na * (n + 1.0) / 2.0;
    let mut tie_term = 0.0;
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut start = 0;
    while start < sorted.len() {
        let mut end = start + 1;
        while end < sorted.len() && sorted[end] == sorted[start] {
            end += 1;
        }
        let t = (end - start) as f64;
        tie_term += t * t * t - t;
        start = end;
    }
    let variance = na * nb / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if variance <= 0.0 {
        return 1.0;
    }
    let z = (observed - mean - 0.5) / variance.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    1.0 - normal.cdf(z)
}

/// One-sided rank-sum test of H1: sample `a` is stochastically greater
/// than sample `b`. Small combined samples are enumerated exactly,
/// larger ones use the tie-corrected normal approximation.
pub fn wilcoxon_rank_sum_one_sided(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(StatsError::TooFewSamples {
            need: 2,
            got: a.len().min(b.len()),
        });
    }
    check_finite(a)?;
    check_finite(b)?;
    let (observed, ranks) = rank_sum_statistic(a, b);
    if ranks.len() <= EXACT_LIMIT {
        Ok(exact_tail(&ranks, a.len(), observed))
    } else {
        Ok(approx_tail(&ranks, a.len(), observed))
    }
}

/// Grouped competition ranks across methods: the best-mean unranked
/// method anchors a group, every unranked method it cannot beat at the
/// threshold (one-sided p >= p_threshold) joins, and the group takes
/// the next rank. Methods arrive as per-seed metric vectors; ranks
/// come back in input order, contiguous from 1.
pub fn assign_ranks(
    metric_sets: &[Vec<f64>],
    direction: Direction,
    p_threshold: f64,
) -> Result<Vec<usize>, StatsError> {
    if metric_sets.is_empty() {
        return Err(StatsError::TooFewSamples { need: 1, got: 0 });
    }
    let oriented: Vec<Vec<f64>> = metric_sets
        .iter()
        .map(|values| match direction {
            Direction::Maximize => values.clone(),
            Direction::Minimize => values.iter().map(|v| -v).collect(),
        })
        .collect();
    let means: Vec<f64> = oriented
        .iter()
        .map(|values| values.iter().sum::<f64>() / values.len().max(1) as f64)
        .collect();
    let mut order: Vec<usize> = (0..oriented.len()).collect();
    order.sort_by(|&a, &b| means[b].total_cmp(&means[a]).then(a.cmp(&b)));

    let mut ranks = vec![0usize; oriented.len()];
    let mut next_rank = 1;
    for anchor_position in 0..order.len() {
        let anchor = order[anchor_position];
        if ranks[anchor] != 0 {
            continue;
        }
        ranks[anchor] = next_rank;
        if oriented.len() > 1 {
            for &other in &order[anchor_position + 1..] {
                if ranks[other] != 0 {
                    continue;
                }
                let p = wilcoxon_rank_sum_one_sided(&oriented[anchor], &oriented[other])?;
                if p >= p_threshold {
                    ranks[other] = next_rank;
                }
            }
        }
        next_rank += 1;
    }
    Ok(ranks)
}

/// Per-seed metrics for every (method, dataset) cell, with the
/// grouped-rank summary across datasets.
#[derive(Clone, Debug)]
pub struct RankTable {
    pub methods: Vec<String>,
    pub datasets: Vec<String>,
    /// cells[method][dataset] = metric value per seed.
    pub cells: Vec<Vec<Vec<f64>>>,
}

impl RankTable {
    pub fn new(
        methods: Vec<String>,
        datasets: Vec<String>,
        cells: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self, StatsError> {
        if cells.len() != methods.len() {
            return Err(StatsError::Length(format!(
                "{} cell rows for {} methods",
                cells.len(),
                methods.len()
            )));
        }
        for row in &cells {
            if row.len() != datasets.len() {
                return Err(StatsError::Length(format!(
                    "{} cells in a row for {} datasets",
                    row.len(),
                    datasets.len()
                )));
            }
            for cell in row {
                if cell.len() < 2 {
                    return Err(StatsError::TooFewSamples {
                        need: 2,
                        got: cell.len(),
                    });
                }
                check_finite(cell)?;
            }
        }
        Ok(RankTable {
            methods,
            datasets,
            cells,
        })
    }

    pub fn mean(&self, method: usize, dataset: usize) -> f64 {
        let cell = &self.cells[method][dataset];
        cell.iter().sum::<f64>() / cell.len() as f64
    }

    /// Sample standard deviation across seeds.
    pub fn std(&self, method: usize, dataset: usize) -> f64 {
        let cell = &self.cells[method][dataset];
        let mean = self.mean(method, dataset);
        let ss: f64 = cell.iter().map(|v| (v - mean) * (v - mean)).sum();
        (ss / (cell.len() - 1) as f64).sqrt()
    }

    pub fn ranks_for_dataset(
        &self,
        dataset: usize,
        direction: Direction,
        p_threshold: f64,
    ) -> Result<Vec<usize>, StatsError> {
        let sets: Vec<Vec<f64>> = self.cells.iter().map(|row| row[dataset].clone()).collect();
        assign_ranks(&sets, direction, p_threshold)
    }

    /// Mean rank of each method across all datasets.
    pub fn mean_ranks(
        &self,
        direction: Direction,
        p_threshold: f64,
    ) -> Result<Vec<f64>, StatsError> {
        let mut totals = vec![0.0; self.methods.len()];
        for dataset in 0..self.datasets.len() {
            for (total, rank) in
                totals
                    .iter_mut()
                    .zip(self.ranks_for_dataset(dataset, direction, p_threshold)?)
            {
                *total += rank as f64;
            }
        }
        Ok(totals
            .into_iter()
            .map(|t| t / self.datasets.len() as f64)
            .collect())
    }
}

fn split_mask(mask: &[bool]) -> Result<(Vec<usize>, Vec<usize>), StatsError> {
    let originals: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
    let extraneous: Vec<usize> = (0..mask.len()).filter(|&i| !mask[i]).collect();
    if originals.is_empty() || extraneous.is_empty() {
        return Err(StatsError::SingleClassMask);
    }
    Ok((originals, extraneous))
}

/// Probability that a random original feature scores above a random
/// extraneous one, ties counting one half. `original_mask` is true for
/// original features.
pub fn roc_auc(scores: &FeatureScores, original_mask: &[bool]) -> Result<f64, StatsError> {
    if scores.scores.len() != original_mask.len() {
        return Err(StatsError::Length(format!(
            "{} scores vs {} mask entries",
            scores.scores.len(),
            original_mask.len()
        )));
    }
    let (originals, extraneous) = split_mask(original_mask)?;
    let mut favorable = 0.0;
    for &o in &originals {
        for &e in &extraneous {
            favorable += match scores.scores[o].total_cmp(&scores.scores[e]) {
                std::cmp::Ordering::Greater => 1.0,
                std::cmp::Ordering::Equal => 0.5,
                std::cmp::Ordering::Less => 0.0,
            };
        }
    }
    Ok(favorable / (originals.len() * extraneous.len()) as f64)
}

/// Fraction of the top-k features that are original, with k fixed to
/// the number of originals. At that k, recall equals precision; both
/// are computed and the identity asserted.
pub fn precision_at_k(scores: &FeatureScores, original_mask: &[bool]) -> Result<f64, StatsError> {
    if scores.scores.len() != original_mask.len() {
        return Err(StatsError::Length(format!(
            "{} scores vs {} mask entries",
            scores.scores.len(),
            original_mask.len()
        )));
    }
    let (originals, _) = split_mask(original_mask)?;
    let k = originals.len();
    let top = select_top_k(scores, k)?;
    let hits = top.iter().filter(|&&i| original_mask[i]).count();
    let precision = hits as f64 / k as f64;
    let recall = hits as f64 / originals.len() as f64;
    assert_eq!(
        precision, recall,
        "k equals the original count, so precision and recall must match"
    );
    Ok(precision)
}

/// Downstream model quality on one split: accuracy for labels,
/// negative RMSE for values. Higher is better for both, so rank
/// directions never flip between tasks.
pub fn downstream_metric(predictions: &Targets, targets: &Targets) -> Result<f64, StatsError> {
    if predictions.len() != targets.len() {
        return Err(StatsError::Length(format!(
            "{} predictions vs {} targets",
            predictions.len(),
            targets.len()
        )));
    }
    if predictions.is_empty() {
        return Err(StatsError::TooFewSamples { need: 1, got: 0 });
    }
    match (predictions, targets) {
        (Targets::Regression(p), Targets::Regression(t)) => {
            check_finite(p)?;
            check_finite(t)?;
            let mse = p.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / p.len() as f64;
            Ok(-mse.sqrt())
        }
        (Targets::Classification(p), Targets::Classification(t)) => {
            let correct = p.iter().zip(t).filter(|(a, b)| a == b).count();
            Ok(correct as f64 / p.len() as f64)
        }
        _ => Err(StatsError::TaskMismatch),
    }
}
