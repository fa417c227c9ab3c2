//! Synthetic datasets with a known informative feature set.
//!
//! Ground truth for selector tests: every generated feature is
//! informative and tagged original, so after augmentation the origin
//! tags say exactly which columns a selector should find.

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{DataError, Dataset, FeatureMeta, FeatureOrigin, Targets, Task};
use crate::seeds;

/// Dataset with X ~ N(0, 1) and a linear (regression) or logit-linear
/// (binary classification) target on the given coefficients plus
/// N(0, noise_sigma) noise on the linear score.
pub fn synthetic_linear(
    n: usize,
    coefficients: &[f64],
    noise_sigma: f64,
    task: Task,
    seed: u64,
) -> Result<Dataset, DataError> {
    let m = coefficients.len();
    if m == 0 {
        return Err(DataError::Length("no coefficients".into()));
    }
    if let Task::Classification { n_classes } = task {
        if n_classes != 2 {
            return Err(DataError::Unsupported(
                "synthetic classification targets are binary".into(),
            ));
        }
    }
    let mut x_rng = seeds::stream_rng(seed, "synthetic-x", &[]);
    let mut x = Array2::zeros((n, m));
    for r in 0..n {
        for c in 0..m {
            x[(r, c)] = StandardNormal.sample(&mut x_rng);
        }
    }
    let mut noise_rng = seeds::stream_rng(seed, "synthetic-noise", &[]);
    let mut scores = Vec::with_capacity(n);
    for r in 0..n {
        let mut s = 0.0;
        for c in 0..m {
            s += x[(r, c)] * coefficients[c];
        }
        let z: f64 = StandardNormal.sample(&mut noise_rng);
        scores.push(s + noise_sigma * z);
    }
    let y = match task {
        Task::Regression => Targets::Regression(scores),
        Task::Classification { .. } => {
            let mut label_rng = seeds::stream_rng(seed, "synthetic-labels", &[]);
            let labels = scores
                .iter()
                .map(|&s| {
                    let p = 1.0 / (1.0 + (-s).exp());
                    usize::from(label_rng.random::<f64>() < p)
                })
                .collect();
            Targets::Classification(labels)
        }
    };
    let features = (0..m)
        .map(|c| FeatureMeta {
            name: format!("x{c}"),
            origin: FeatureOrigin::Original,
        })
        .collect();
    Ok(Dataset {
        x,
        y,
        task,
        features,
        target_name: "target".into(),
        split: None,
        split_seed: None,
    })
}

/// Linear-target dataset with random coefficients on `m_informative`
/// features and noise sigma 0.1. Coefficient magnitudes are drawn from
/// U(0.5, 1.5) with random signs, so every feature carries signal. For
/// regression the coefficients are rescaled so the target has unit
/// variance by construction.
pub fn make_synthetic_oracle(
    n: usize,
    m_informative: usize,
    task: Task,
    seed: u64,
) -> Result<Dataset, DataError> {
    if m_informative == 0 {
        return Err(DataError::Length("m_informative must be at least 1".into()));
    }
    let mut coef_rng = seeds::stream_rng(seed, "synthetic-coefficients", &[]);
    let mut coefficients: Vec<f64> = (0..m_informative)
        .map(|_| {
            let magnitude = 0.5 + coef_rng.random::<f64>();
            let sign = if coef_rng.random::<bool>() { 1.0 } else { -1.0 };
            sign * magnitude
        })
        .collect();
    let mut sigma = 0.1;
    if task == Task::Regression {
        let total: f64 = coefficients.iter().map(|c| c * c).sum::<f64>() + sigma * sigma;
        let scale = total.sqrt().recip();
        for c in coefficients.iter_mut() {
            *c *= scale;
        }
        sigma *= scale;
    }
    synthetic_linear(n, &coefficients, sigma, task, seed)
}
