//! Univariate F statistics, one feature at a time.
//!
//! Classification scores are one-way ANOVA F values; regression scores
//! are the F statistic of the per-feature Pearson correlation. Constant
//! features score 0, and a vanishing within-group variance is floored
//! so perfect separation yields a large finite score instead of
//! infinity.

use ndarray::ArrayView2;

use super::{FeatureScores, FsError};
use crate::data::Targets;

/// Floor for variance denominators; keeps F finite when a feature
/// separates the classes perfectly.
const DENOM_FLOOR: f64 = 1e-30;

fn check_finite(x: ArrayView2<f64>) -> Result<(), FsError> {
    for ((row, col), &v) in x.indexed_iter() {
        if !v.is_finite() {
            return Err(FsError::NonFiniteInput { row, col });
        }
    }
    Ok(())
}

fn anova_f(column: &[f64], labels: &[usize], n_classes: usize) -> f64 {
    let n = column.len();
    let mut class_sum = vec![0.0; n_classes];
    let mut class_count = vec![0usize; n_classes];
    for (&v, &c) in column.iter().zip(labels) {
        class_sum[c] += v;
        class_count[c] += 1;
    }
    let grand_mean = column.iter().sum::<f64>() / n as f64;
    let mut ss_between = 0.0;
    for c in 0..n_classes {
        if class_count[c] == 0 {
            continue;
        }
        let mean_c = class_sum[c] / class_count[c] as f64;
        ss_between += class_count[c] as f64 * (mean_c - grand_mean) * (mean_c - grand_mean);
    }
    if ss_between <= 0.0 {
        return 0.0;
    }
    let mut ss_within = 0.0;
    for (&v, &c) in column.iter().zip(labels) {
        let mean_c = class_sum[c] / class_count[c] as f64;
        ss_within += (v - mean_c) * (v - mean_c);
    }
    let k = class_count.iter().filter(|&&c| c > 0).count();
    let ms_between = ss_between / (k - 1) as f64;
    let ms_within = (ss_within / (n - k) as f64).max(DENOM_FLOOR);
    ms_between / ms_within
}

fn regression_f(column: &[f64], y: &[f64]) -> f64 {
    let n = column.len() as f64;
    let mean_x = column.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (&a, &b) in column.iter().zip(y) {
        cov += (a - mean_x) * (b - mean_y);
        var_x += (a - mean_x) * (a - mean_x);
        var_y += (b - mean_y) * (b - mean_y);
    }
    if var_x <= 0.0 || var_y <= 0.0 {
        return 0.0;
    }
    let r2 = (cov * cov / (var_x * var_y)).min(1.0);
    r2 / (1.0 - r2).max(DENOM_FLOOR) * (n - 2.0)
}

/// F statistic per feature; the task comes from the target variant.
pub fn univariate_scores(x: ArrayView2<f64>, y: &Targets) -> Result<FeatureScores, FsError> {
    let n = x.nrows();
    if n < 3 {
        return Err(FsError::TooFewSamples { need: 3, got: n });
    }
    if y.len() != n {
        return Err(FsError::Length(format!("{} targets for {n} rows", y.len())));
    }
    check_finite(x)?;
    let scores: Vec<f64> = match y {
        Targets::Classification(labels) => {
            let n_classes = labels.iter().max().map_or(0, |&c| c + 1);
            let present = {
                let mut seen = vec![false; n_classes];
                for &c in labels {
                    seen[c] = true;
                }
                seen.iter().filter(|&&s| s).count()
            };
            if present < 2 {
                return Err(FsError::DegreesOfFreedom { n, k: present });
            }
            if n <= present {
                return Err(FsError::DegreesOfFreedom { n, k: present });
            }
            x.columns()
                .into_iter()
                .map(|col| anova_f(&col.to_vec(), labels, n_classes))
                .collect()
        }
        Targets::Regression(targets) => {
            for (row, &v) in targets.iter().enumerate() {
                if !v.is_finite() {
                    return Err(FsError::NonFiniteInput {
                        row,
                        col: usize::MAX,
                    });
                }
            }
            x.columns()
                .into_iter()
                .map(|col| regression_f(&col.to_vec(), targets))
                .collect()
        }
    };
    FeatureScores::new(scores, "univariate", "train")
}
