//! Extraneous-feature generators.
//!
//! Each generator appends `round(m * p / (1 - p))` columns, where m is
//! the count of original features, so the extraneous share of the
//! result is p up to rounding. Generators run on preprocessed data and
//! never touch existing columns. Column noise is drawn from one seeded
//! stream per column over all rows in dataset order, so a generated
//! column is the same random variable across train, val, and test.

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{preprocess::mean_std, DataError, Dataset, FeatureMeta, FeatureOrigin, Split};
use crate::seeds;

/// Default ceiling on total columns after augmentation.
pub const DEFAULT_FEATURE_CAP: usize = 4096;

/// Distribution of the corruption noise.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum NoiseKind {
    Gaussian,
    Laplace,
}

/// Selects one of the three generators by name.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentKind {
    Random,
    CorruptGauss,
    CorruptLaplace,
    SecondOrder,
}

impl AugmentKind {
    pub fn label(&self) -> &'static str {
        match self {
            AugmentKind::Random => "random",
            AugmentKind::CorruptGauss => "corrupt_gauss",
            AugmentKind::CorruptLaplace => "corrupt_laplace",
            AugmentKind::SecondOrder => "second_order",
        }
    }
}

/// Dispatches to the generator named by `kind`. Returns how many
/// columns were added.
pub fn augment(
    ds: &mut Dataset,
    kind: AugmentKind,
    p: f64,
    seed: u64,
    cap: usize,
) -> Result<usize, DataError> {
    match kind {
        AugmentKind::Random => add_random_features(ds, p, seed, cap),
        AugmentKind::CorruptGauss => add_corrupted_features(ds, p, NoiseKind::Gaussian, seed, cap),
        AugmentKind::CorruptLaplace => add_corrupted_features(ds, p, NoiseKind::Laplace, seed, cap),
        AugmentKind::SecondOrder => add_second_order_features(ds, p, seed, cap),
    }
}

/// Number of extra columns for original count `m` and extraneous
/// fraction `p`: round(m * p / (1 - p)).
pub fn extra_count(m: usize, p: f64) -> Result<usize, DataError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(DataError::BadFraction(p));
    }
    Ok((m as f64 * p / (1.0 - p)).round() as usize)
}

fn check_cap(ds: &Dataset, extra: usize, cap: usize) -> Result<(), DataError> {
    let total = ds.m_total() + extra;
    if total > cap {
        return Err(DataError::FeatureCap { total, cap });
    }
    Ok(())
}

/// Laplace(0, scale) by inverse-CDF sampling; u is kept strictly inside
/// (0, 1) so the log never sees zero.
fn sample_laplace<R: Rng>(rng: &mut R, scale: f64) -> f64 {
    let mut u: f64 = rng.random();
    if u == 0.0 {
        u = f64::MIN_POSITIVE;
    }
    if u < 0.5 {
        scale * (2.0 * u).ln()
    } else {
        -scale * (2.0 * (1.0 - u)).ln()
    }
}

/// Appends i.i.d. N(0, 1) columns tagged [`FeatureOrigin::Random`].
/// Returns how many were added.
pub fn add_random_features(
    ds: &mut Dataset,
    p: f64,
    seed: u64,
    cap: usize,
) -> Result<usize, DataError> {
    let count = extra_count(ds.n_original(), p)?;
    check_cap(ds, count, cap)?;
    let n = ds.n();
    let base = ds.m_total();
    let mut cols = Array2::zeros((n, count));
    let mut metas = Vec::with_capacity(count);
    for k in 0..count {
        let mut rng = seeds::stream_rng(seed, "random-feature", &[k as u64]);
        for r in 0..n {
            cols[(r, k)] = StandardNormal.sample(&mut rng);
        }
        metas.push(FeatureMeta {
            name: format!("rand_{}", base + k),
            origin: FeatureOrigin::Random,
        });
    }
    ds.append_columns(cols, metas)?;
    Ok(count)
}

/// Appends corrupted copies of uniformly chosen original features:
/// x_c = 0.5 x + 0.5 e with e ~ N(0, s) or x_c = 0.5 x + 0.5 s l with
/// l ~ Laplace(0, 1/sqrt(2)), where s is the train std of the source.
/// Requires a split assignment for the train statistics.
pub fn add_corrupted_features(
    ds: &mut Dataset,
    p: f64,
    kind: NoiseKind,
    seed: u64,
    cap: usize,
) -> Result<usize, DataError> {
    let m_orig = ds.n_original();
    let count = extra_count(m_orig, p)?;
    check_cap(ds, count, cap)?;
    let train_rows = ds.rows_in(Split::Train)?;
    let n = ds.n();
    let base = ds.m_total();

    let mut source_rng = seeds::stream_rng(seed, "corrupt-source", &[]);
    let sources: Vec<usize> = (0..count)
        .map(|_| source_rng.random_range(0..m_orig))
        .collect();

    let mut cols = Array2::zeros((n, count));
    let mut metas = Vec::with_capacity(count);
    for (k, &src) in sources.iter().enumerate() {
        let (_, sigma) = mean_std(train_rows.iter().map(|&r| ds.x[(r, src)]));
        let mut rng = seeds::stream_rng(seed, "corrupt-noise", &[k as u64]);
        for r in 0..n {
            let noise = match kind {
                NoiseKind::Gaussian => {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    sigma * z
                }
                NoiseKind::Laplace => {
                    sigma * sample_laplace(&mut rng, std::f64::consts::FRAC_1_SQRT_2)
                }
            };
            cols[(r, k)] = 0.5 * ds.x[(r, src)] + 0.5 * noise;
        }
        metas.push(FeatureMeta {
            name: format!("corr_{}_from_{}", base + k, ds.features[src].name),
            origin: FeatureOrigin::Corrupted { source: src },
        });
    }
    ds.append_columns(cols, metas)?;
    Ok(count)
}

/// Appends elementwise products of two distinct uniformly chosen
/// original columns, tagged with the exact pair so the column can be
/// recomputed bit for bit.
pub fn add_second_order_features(
    ds: &mut Dataset,
    p: f64,
    seed: u64,
    cap: usize,
) -> Result<usize, DataError> {
    let m_orig = ds.n_original();
    if m_orig < 2 {
        return Err(DataError::TooFewColumns);
    }
    let count = extra_count(m_orig, p)?;
    check_cap(ds, count, cap)?;
    let n = ds.n();
    let base = ds.m_total();

    let mut cols = Array2::zeros((n, count));
    let mut metas = Vec::with_capacity(count);
    for k in 0..count {
        let mut rng = seeds::stream_rng(seed, "second-order", &[k as u64]);
        let i = rng.random_range(0..m_orig);
        let j = loop {
            let j = rng.random_range(0..m_orig);
            if j != i {
                break j;
            }
        };
        for r in 0..n {
            cols[(r, k)] = ds.x[(r, i)] * ds.x[(r, j)];
        }
        metas.push(FeatureMeta {
            name: format!("prod_{}_{}x{}", base + k, i, j),
            origin: FeatureOrigin::SecondOrder { i, j },
        });
    }
    ds.append_columns(cols, metas)?;
    Ok(count)
}
