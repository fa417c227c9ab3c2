//! L1-penalized linear models fitted by accelerated proximal gradient
//! descent (FISTA).
//!
//! The objective is the convex combination alpha * L + (1 - alpha) * P
//! where L is the mean squared error (regression) or the multinomial
//! cross entropy (classification) and P ties each feature's
//! coefficients together: |w_j| for a single output, the L2 norm of
//! row j of the weight matrix otherwise. A bias column is appended
//! internally and never penalized. Scores are the per-feature group
//! norms of the fitted coefficients.

use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;

use super::{FeatureScores, FsError};
use crate::data::Targets;
use crate::seeds;

/// Solver knobs. The step is step_scale / Lipschitz; values above 1
/// are only useful for provoking divergence in tests.
#[derive(Clone, Debug)]
pub struct LassoOptions {
    pub max_iter: usize,
    /// Relative objective change below which iteration stops.
    pub tol: f64,
    pub step_scale: f64,
}

impl Default for LassoOptions {
    fn default() -> Self {
        LassoOptions {
            max_iter: 10_000,
            tol: 1e-10,
            step_scale: 1.0,
        }
    }
}

pub(crate) fn soft_threshold(value: f64, threshold: f64) -> f64 {
    if value > threshold {
        value - threshold
    } else if value < -threshold {
        value + threshold
    } else {
        0.0
    }
}

/// Largest eigenvalue of AᵀA by power iteration. The iterate count is
/// generous because the matrices here are at most a few hundred wide.
pub(crate) fn spectral_norm_sq(a: &Array2<f64>, rng: &mut impl Rng) -> f64 {
    let d = a.ncols();
    let mut v = Array1::from_shape_fn(d, |_| rng.random::<f64>() - 0.5);
    let norm = v.dot(&v).sqrt();
    if norm == 0.0 {
        v[0] = 1.0;
    } else {
        v /= norm;
    }
    let mut lambda = 0.0;
    for _ in 0..200 {
        let w = a.t().dot(&a.dot(&v));
        let next = v.dot(&w);
        let w_norm = w.dot(&w).sqrt();
        if w_norm == 0.0 {
            return 0.0;
        }
        v = w / w_norm;
        if (next - lambda).abs() <= 1e-12 * next.abs().max(1.0) {
            return next;
        }
        lambda = next;
    }
    lambda
}

enum Objective<'a> {
    Squared {
        y: Array2<f64>,
    },
    Softmax {
        labels: &'a [usize],
        one_hot: Array2<f64>,
    },
}

impl Objective<'_> {
    fn n_outputs(&self) -> usize {
        match self {
            Objective::Squared { .. } => 1,
            Objective::Softmax { one_hot, .. } => one_hot.ncols(),
        }
    }

    /// Curvature bound of the smooth loss relative to the data Gram
    /// matrix: the squared loss Hessian is (2/n) AᵀA, the softmax
    /// Hessian is at most (1/2n) AᵀA.
    fn curvature_factor(&self, n: usize) -> f64 {
        match self {
            Objective::Squared { .. } => 2.0 / n as f64,
            Objective::Softmax { .. } => 0.5 / n as f64,
        }
    }

    fn loss(&self, a: &Array2<f64>, w: &Array2<f64>) -> f64 {
        let n = a.nrows() as f64;
        match self {
            Objective::Squared { y } => {
                let resid = a.dot(w) - y;
                resid.mapv(|r| r * r).sum() / n
            }
            Objective::Softmax { labels, .. } => {
                let probs = softmax_rows(a.dot(w));
                let mut total = 0.0;
                for (i, &c) in labels.iter().enumerate() {
                    total -= probs[[i, c]].max(1e-300).ln();
                }
                total / n
            }
        }
    }

    fn grad(&self, a: &Array2<f64>, w: &Array2<f64>) -> Array2<f64> {
        let n = a.nrows() as f64;
        match self {
            Objective::Squared { y } => a.t().dot(&(a.dot(w) - y)) * (2.0 / n),
            Objective::Softmax { one_hot, .. } => {
                let probs = softmax_rows(a.dot(w));
                a.t().dot(&(probs - one_hot)) / n
            }
        }
    }
}

fn softmax_rows(mut logits: Array2<f64>) -> Array2<f64> {
    for mut row in logits.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    logits
}

/// Group penalty over feature rows; the bias row (last) is skipped.
fn penalty(w: &Array2<f64>) -> f64 {
    (0..w.nrows() - 1)
        .map(|j| w.row(j).mapv(|v| v * v).sum().sqrt())
        .sum()
}

/// Group soft threshold on each feature row; the bias row is skipped.
fn prox(w: &mut Array2<f64>, threshold: f64) {
    let m = w.nrows() - 1;
    for j in 0..m {
        let mut row = w.row_mut(j);
        if row.len() == 1 {
            row[0] = soft_threshold(row[0], threshold);
            continue;
        }
        let norm = row.mapv(|v| v * v).sum().sqrt();
        if norm <= threshold {
            row.fill(0.0);
        } else {
            let scale = 1.0 - threshold / norm;
            row.mapv_inplace(|v| v * scale);
        }
    }
}

/// Fits the penalized linear model and scores features by coefficient
/// group norm. The seed only steers the power-iteration start vector,
/// so results are deterministic per seed.
pub fn lasso_fit(
    x: ArrayView2<f64>,
    y: &Targets,
    alpha: f64,
    options: &LassoOptions,
    seed: u64,
) -> Result<FeatureScores, FsError> {
    if !alpha.is_finite() || alpha <= 0.0 || alpha > 1.0 {
        return Err(FsError::BadAlpha(alpha));
    }
    let (n, m) = x.dim();
    if n < 2 {
        return Err(FsError::TooFewSamples { need: 2, got: n });
    }
    if y.len() != n {
        return Err(FsError::Length(format!("{} targets for {n} rows", y.len())));
    }
    for ((row, col), &v) in x.indexed_iter() {
        if !v.is_finite() {
            return Err(FsError::NonFiniteInput { row, col });
        }
    }

    let objective = match y {
        Targets::Regression(values) => {
            for (row, &v) in values.iter().enumerate() {
                if !v.is_finite() {
                    return Err(FsError::NonFiniteInput {
                        row,
                        col: usize::MAX,
                    });
                }
            }
            let y_col = Array2::from_shape_fn((n, 1), |(i, _)| values[i]);
            Objective::Squared { y: y_col }
        }
        Targets::Classification(labels) => {
            let k = labels.iter().max().map_or(0, |&c| c + 1);
            if k < 2 {
                return Err(FsError::DegreesOfFreedom { n, k });
            }
            let mut one_hot = Array2::zeros((n, k));
            for (i, &c) in labels.iter().enumerate() {
                one_hot[[i, c]] = 1.0;
            }
            Objective::Softmax { labels, one_hot }
        }
    };

    // Augment with a bias column so the intercept rides along unpenalized.
    let mut a = Array2::ones((n, m + 1));
    a.slice_mut(ndarray::s![.., ..m]).assign(&x);

    let mut rng = seeds::stream_rng(seed, "lasso-power", &[]);
    let gram_top = spectral_norm_sq(&a, &mut rng);
    let lipschitz = (alpha * objective.curvature_factor(n) * gram_top).max(1e-30);
    let step = options.step_scale / lipschitz;
    let l1_weight = 1.0 - alpha;

    let k = objective.n_outputs();
    let mut w = Array2::zeros((m + 1, k));
    let mut momentum = w.clone();
    let mut t_k = 1.0f64;
    let initial = alpha * objective.loss(&a, &w);
    let mut previous = initial;
    for iter in 0..options.max_iter {
        let grad = objective.grad(&a, &momentum) * alpha;
        let mut w_next = &momentum - &(grad * step);
        prox(&mut w_next, step * l1_weight);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t_k * t_k).sqrt());
        momentum = &w_next + &((&w_next - &w) * ((t_k - 1.0) / t_next));
        w = w_next;
        t_k = t_next;

        let current = alpha * objective.loss(&a, &w) + l1_weight * penalty(&w);
        if !current.is_finite() || current > 10.0 * initial.max(1.0) {
            return Err(FsError::Divergence {
                iter,
                objective: current,
            });
        }
        if (previous - current).abs() <= options.tol * previous.abs().max(1.0) {
            break;
        }
        previous = current;
    }

    let scores = (0..m)
        .map(|j| w.row(j).mapv(|v| v * v).sum().sqrt())
        .collect();
    FeatureScores::new(scores, "lasso", "train")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds::stream_rng;
    use ndarray::arr2;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(0.5, 1.0), 0.0);
        assert_eq!(soft_threshold(1.5, 1.0), 0.5);
        assert_eq!(soft_threshold(-2.0, 0.5), -1.5);
        assert_eq!(soft_threshold(0.0, 0.0), 0.0);
    }

    #[test]
    fn spectral_norm_matches_diagonal_eigenvalue() {
        let a = arr2(&[[3.0, 0.0], [0.0, 1.0], [0.0, 0.0]]);
        let mut rng = stream_rng(0, "test-power", &[]);
        let lambda = spectral_norm_sq(&a, &mut rng);
        assert!((lambda - 9.0).abs() < 1e-8, "lambda = {lambda}");
    }

    fn gaussian_design(n: usize, m: usize, seed: u64) -> Array2<f64> {
        let mut rng = stream_rng(seed, "lasso-test-design", &[]);
        Array2::from_shape_fn((n, m), |_| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn informative_feature_dominates_noise_feature() {
        let n = 500;
        let x = gaussian_design(n, 2, 11);
        let mut rng = stream_rng(11, "lasso-test-noise", &[]);
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let eps: f64 = StandardNormal.sample(&mut rng);
                3.0 * x[[i, 0]] + 0.01 * eps
            })
            .collect();
        let scores = lasso_fit(
            x.view(),
            &Targets::Regression(y),
            0.99,
            &LassoOptions::default(),
            7,
        )
        .unwrap();
        let ratio = scores.scores[0] / scores.scores[1].max(1e-12);
        assert!(ratio > 10.0, "scores = {:?}", scores.scores);
    }

    #[test]
    fn tiny_penalty_recovers_true_coefficients() {
        let n = 200;
        let x = gaussian_design(n, 2, 3);
        let y: Vec<f64> = (0..n).map(|i| 2.0 * x[[i, 0]] - 1.0 * x[[i, 1]]).collect();
        let scores = lasso_fit(
            x.view(),
            &Targets::Regression(y),
            0.999999,
            &LassoOptions::default(),
            5,
        )
        .unwrap();
        assert!((scores.scores[0] - 2.0).abs() < 1e-2, "{:?}", scores.scores);
        assert!((scores.scores[1] - 1.0).abs() < 1e-2, "{:?}", scores.scores);
    }

    #[test]
    fn heavy_penalty_shrinks_everything_to_zero() {
        let n = 100;
        let x = gaussian_design(n, 3, 9);
        let y: Vec<f64> = (0..n).map(|i| x[[i, 0]]).collect();
        let scores = lasso_fit(
            x.view(),
            &Targets::Regression(y),
            0.001,
            &LassoOptions::default(),
            5,
        )
        .unwrap();
        assert!(
            scores.scores.iter().all(|&s| s == 0.0),
            "{:?}",
            scores.scores
        );
    }

    #[test]
    fn classification_scores_group_norm_over_classes() {
        let n = 300;
        let x = gaussian_design(n, 2, 21);
        // Three classes split along feature 0 only.
        let labels: Vec<usize> = (0..n)
            .map(|i| {
                let v = x[[i, 0]];
                if v < -0.5 {
                    0
                } else if v < 0.5 {
                    1
                } else {
                    2
                }
            })
            .collect();
        let scores = lasso_fit(
            x.view(),
            &Targets::Classification(labels),
            0.99,
            &LassoOptions::default(),
            13,
        )
        .unwrap();
        assert_eq!(scores.scores.len(), 2);
        assert!(
            scores.scores[0] > 5.0 * scores.scores[1].max(1e-12),
            "{:?}",
            scores.scores
        );
    }

    #[test]
    fn same_seed_is_bitwise_deterministic() {
        let x = gaussian_design(50, 4, 2);
        let y: Vec<f64> = (0..50).map(|i| x[[i, 1]] - x[[i, 3]]).collect();
        let t = Targets::Regression(y);
        let a = lasso_fit(x.view(), &t, 0.95, &LassoOptions::default(), 99).unwrap();
        let b = lasso_fit(x.view(), &t, 0.95, &LassoOptions::default(), 99).unwrap();
        assert_eq!(a.scores, b.scores);
    }

    #[test]
    fn oversized_step_reports_divergence() {
        let x = gaussian_design(80, 3, 4);
        let y: Vec<f64> = (0..80).map(|i| 5.0 * x[[i, 0]]).collect();
        let options = LassoOptions {
            step_scale: 50.0,
            ..LassoOptions::default()
        };
        match lasso_fit(x.view(), &Targets::Regression(y), 0.9, &options, 1) {
            Err(FsError::Divergence { objective, .. }) => {
                assert!(objective.is_nan() || objective > 0.0)
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn alpha_must_sit_in_unit_interval() {
        let x = gaussian_design(10, 2, 6);
        let y = Targets::Regression(vec![0.0; 10]);
        for bad in [0.0, -0.5, 1.5, f64::NAN] {
            assert!(matches!(
                lasso_fit(x.view(), &y, bad, &LassoOptions::default(), 0),
                Err(FsError::BadAlpha(_))
            ));
        }
    }

    #[test]
    fn single_class_labels_rejected() {
        let x = gaussian_design(10, 2, 8);
        let y = Targets::Classification(vec![0; 10]);
        assert!(matches!(
            lasso_fit(x.view(), &y, 0.9, &LassoOptions::default(), 0),
            Err(FsError::DegreesOfFreedom { .. })
        ));
    }
}
