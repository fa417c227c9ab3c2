//! Preprocessing fitted on the train split and applied everywhere.
//!
//! The quantile transform maps each feature through its empirical train
//! CDF and then the inverse standard-normal CDF, so transformed train
//! columns are approximately N(0, 1). Standardization subtracts the
//! train mean and divides by the train population std. Regression
//! targets are standardized the same way.

use ndarray::{Array2, ArrayView2, Axis};
use statrs::distribution::ContinuousCDF;
use statrs::distribution::Normal;

use super::{DataError, Dataset, PreprocessMethod, PreprocessSpec, Split, Targets};

/// Probabilities are clipped here before the inverse normal CDF, so
/// out-of-range values map to roughly +-5.199 rather than +-infinity.
const PROB_CLIP: f64 = 1e-7;

/// Linear interpolation of `xq` on the polyline (xs, ys); xs must be
/// nondecreasing. Values outside the range clamp to the end points, and
/// exact matches inside a flat run resolve to its first point.
fn interp(xq: f64, xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len();
    if xq <= xs[0] {
        return ys[0];
    }
    if xq >= xs[n - 1] {
        return ys[n - 1];
    }
    let hi = xs.partition_point(|&v| v < xq);
    if xs[hi] == xq {
        return ys[hi];
    }
    let lo = hi - 1;
    let t = (xq - xs[lo]) / (xs[hi] - xs[lo]);
    ys[lo] + t * (ys[hi] - ys[lo])
}

/// Interpolated quantile of sorted `values` at probability `p`.
fn quantile_linear(values: &[f64], p: f64) -> f64 {
    let pos = p * (values.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = lo.min(values.len() - 2) + 1;
    let t = pos - lo as f64;
    values[lo] + t * (values[hi] - values[lo])
}

/// Per-feature quantile-to-normal transform.
///
/// Construction requires fitting, so there is no unfitted state to
/// misuse. Plateaus in the empirical CDF are resolved by averaging the
/// forward and reverse interpolations, which keeps the map monotone and
/// sends the train median to about zero.
#[derive(Clone, Debug)]
pub struct QuantileTransformer {
    references: Vec<Vec<f64>>,
    probs: Vec<f64>,
}

impl QuantileTransformer {
    /// Fits reference quantiles per column: n_q = min(1000, n_train)
    /// points of the empirical distribution.
    pub fn fit(x_train: ArrayView2<f64>) -> Result<Self, DataError> {
        let n = x_train.nrows();
        if n < 2 {
            return Err(DataError::TooFewSamples { need: 2, got: n });
        }
        let n_q = n.min(1000);
        let probs: Vec<f64> = (0..n_q).map(|i| i as f64 / (n_q - 1) as f64).collect();
        let mut references = Vec::with_capacity(x_train.ncols());
        for col in x_train.axis_iter(Axis(1)) {
            let mut sorted: Vec<f64> = col.to_vec();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            references.push(probs.iter().map(|&p| quantile_linear(&sorted, p)).collect());
        }
        Ok(QuantileTransformer { references, probs })
    }

    /// Transforms every column of `x` (same column order as the fit).
    pub fn apply(&self, x: ArrayView2<f64>) -> Result<Array2<f64>, DataError> {
        if x.ncols() != self.references.len() {
            return Err(DataError::Length(format!(
                "{} columns, transformer fitted on {}",
                x.ncols(),
                self.references.len()
            )));
        }
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        let neg_probs: Vec<f64> = self.probs.iter().rev().map(|&p| -p).collect();
        let mut out = x.to_owned();
        for (c, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let refs = &self.references[c];
            let neg_refs: Vec<f64> = refs.iter().rev().map(|&r| -r).collect();
            for v in col.iter_mut() {
                let forward = interp(*v, refs, &self.probs);
                // The reverse pass on negated axes resolves plateaus from
                // the other side; averaging centers values inside a flat
                // run of the empirical CDF.
                let backward = -interp(-*v, &neg_refs, &neg_probs);
                let p = (0.5 * (forward + backward)).clamp(PROB_CLIP, 1.0 - PROB_CLIP);
                *v = normal.inverse_cdf(p);
            }
        }
        Ok(out)
    }
}

/// Train-statistics standardizer: (v - mean) / std with population std.
#[derive(Clone, Debug)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

pub(crate) fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl Standardizer {
    /// Fits one mean/std pair per column; zero train variance is an
    /// error naming the offending feature.
    pub fn fit(x_train: ArrayView2<f64>, names: &[String]) -> Result<Self, DataError> {
        let mut means = Vec::with_capacity(x_train.ncols());
        let mut stds = Vec::with_capacity(x_train.ncols());
        for (c, col) in x_train.axis_iter(Axis(1)).enumerate() {
            let (mean, std) = mean_std(col.iter().copied());
            if std == 0.0 {
                let name = names
                    .get(c)
                    .cloned()
                    .unwrap_or_else(|| format!("column {c}"));
                return Err(DataError::ZeroVariance(name));
            }
            means.push(mean);
            stds.push(std);
        }
        Ok(Standardizer { means, stds })
    }

    pub fn apply(&self, x: ArrayView2<f64>) -> Result<Array2<f64>, DataError> {
        if x.ncols() != self.means.len() {
            return Err(DataError::Length(format!(
                "{} columns, standardizer fitted on {}",
                x.ncols(),
                self.means.len()
            )));
        }
        let mut out = x.to_owned();
        for (c, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            for v in col.iter_mut() {
                *v = (*v - self.means[c]) / self.stds[c];
            }
        }
        Ok(out)
    }
}

/// The fitted transforms applied to a dataset, kept for inspection.
#[derive(Debug)]
pub struct Preprocessor {
    pub feature_methods: Vec<PreprocessMethod>,
    /// (mean, std) used on a regression target, if any.
    pub target_stats: Option<(f64, f64)>,
}

/// Fits the configured transform for each feature on the train split
/// and rewrites the whole matrix in place. Regression targets are
/// standardized unless `spec` opts out. Requires a split assignment.
pub fn preprocess(ds: &mut Dataset, spec: &PreprocessSpec) -> Result<Preprocessor, DataError> {
    let train_rows = ds.rows_in(Split::Train)?;
    let mut methods = Vec::with_capacity(ds.m_total());
    for f in &ds.features {
        methods.push(spec.overrides.get(&f.name).copied().unwrap_or(spec.default));
    }
    for (c, method) in methods.iter().enumerate() {
        let col_all = ds.x.select(Axis(1), &[c]);
        let col_train = col_all.select(Axis(0), &train_rows);
        let transformed = match method {
            PreprocessMethod::Quantile => {
                let t = QuantileTransformer::fit(col_train.view())?;
                t.apply(col_all.view())?
            }
            PreprocessMethod::Standardize => {
                let name = std::slice::from_ref(&ds.features[c].name);
                let t = Standardizer::fit(col_train.view(), name)?;
                t.apply(col_all.view())?
            }
            PreprocessMethod::None => col_all,
        };
        for r in 0..ds.n() {
            ds.x[(r, c)] = transformed[(r, 0)];
        }
    }

    let mut target_stats = None;
    if spec.standardize_target {
        if let Targets::Regression(values) = &mut ds.y {
            let (mean, std) = mean_std(train_rows.iter().map(|&i| values[i]));
            if std == 0.0 {
                return Err(DataError::ZeroVariance(ds.target_name.clone()));
            }
            for v in values.iter_mut() {
                *v = (*v - mean) / std;
            }
            target_stats = Some((mean, std));
        }
    }
    Ok(Preprocessor {
        feature_methods: methods,
        target_stats,
    })
}
