//! Hyperparameter distributions and named search spaces.
//!
//! The named constructors reproduce the published tuning ranges for
//! the MLP, the gradient-boosted trees, the random forest, and the
//! per-method penalty weights. Sampling order is declaration order,
//! so a space and an rng state together determine the draw.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::nn::MAX_DROPOUT;

/// One hyperparameter distribution. `ChoiceWithZero` puts half the
/// mass on exactly 0.0 and half on the inner distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    Uniform { lo: f64, hi: f64 },
    LogUniform { lo: f64, hi: f64 },
    UniformInt { lo: u64, hi: u64 },
    ChoiceWithZero { inner: Box<Param> },
}

impl Param {
    pub fn validate(&self) -> Result<(), BenchError> {
        match self {
            Param::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(BenchError::BadSpace(format!(
                        "uniform bounds [{lo}, {hi}] need finite lo < hi"
                    )));
                }
            }
            Param::LogUniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && *lo > 0.0 && lo < hi) {
                    return Err(BenchError::BadSpace(format!(
                        "loguniform bounds [{lo}, {hi}] need finite 0 < lo < hi"
                    )));
                }
            }
            Param::UniformInt { lo, hi } => {
                if lo >= hi {
                    return Err(BenchError::BadSpace(format!(
                        "integer bounds [{lo}, {hi}] need lo < hi"
                    )));
                }
            }
            Param::ChoiceWithZero { inner } => inner.validate()?,
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        match self {
            Param::Uniform { lo, hi } => rng.random_range(*lo..*hi),
            Param::LogUniform { lo, hi } => rng.random_range(lo.ln()..hi.ln()).exp(),
            Param::UniformInt { lo, hi } => rng.random_range(*lo..=*hi) as f64,
            Param::ChoiceWithZero { inner } => {
                if rng.random_bool(0.5) {
                    0.0
                } else {
                    inner.sample(rng)
                }
            }
        }
    }

    /// Whether `value` could have been drawn from this distribution.
    pub fn contains(&self, value: f64) -> bool {
        match self {
            Param::Uniform { lo, hi } | Param::LogUniform { lo, hi } => {
                value >= *lo && value <= *hi
            }
            Param::UniformInt { lo, hi } => {
                value.fract() == 0.0 && value >= *lo as f64 && value <= *hi as f64
            }
            Param::ChoiceWithZero { inner } => value == 0.0 || inner.contains(value),
        }
    }
}

fn uniform(lo: f64, hi: f64) -> Param {
    Param::Uniform { lo, hi }
}

fn loguniform(lo: f64, hi: f64) -> Param {
    Param::LogUniform { lo, hi }
}

fn uniform_int(lo: u64, hi: u64) -> Param {
    Param::UniformInt { lo, hi }
}

fn choice_with_zero(inner: Param) -> Param {
    Param::ChoiceWithZero {
        inner: Box::new(inner),
    }
}

/// An ordered set of named distributions with unique names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    params: Vec<(String, Param)>,
}

impl SearchSpace {
    pub fn new(params: Vec<(String, Param)>) -> Result<Self, BenchError> {
        let mut space = SearchSpace { params: Vec::new() };
        for (name, param) in params {
            space.push(name, param)?;
        }
        Ok(space)
    }

    pub fn push(&mut self, name: impl Into<String>, param: Param) -> Result<(), BenchError> {
        let name = name.into();
        if name.is_empty() {
            return Err(BenchError::BadSpace("empty parameter name".into()));
        }
        if self.params.iter().any(|(n, _)| *n == name) {
            return Err(BenchError::BadSpace(format!(
                "duplicate parameter '{name}'"
            )));
        }
        param.validate()?;
        self.params.push((name, param));
        Ok(())
    }

    pub fn params(&self) -> &[(String, Param)] {
        &self.params
    }

    pub fn get(&self, name: &str) -> Option<&Param> {
        self.params.iter().find(|(n, _)| n == name).map(|(_, p)| p)
    }

    /// Appends every distribution of `other` whose name is not yet
    /// present.
    pub fn merge(&mut self, other: &SearchSpace) -> Result<(), BenchError> {
        for (name, param) in &other.params {
            if self.get(name).is_none() {
                self.push(name.clone(), param.clone())?;
            }
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut impl Rng) -> BTreeMap<String, f64> {
        self.params
            .iter()
            .map(|(name, param)| (name.clone(), param.sample(rng)))
            .collect()
    }

    /// MLP tuning space: depth, width, dropout, learning rate, and
    /// weight decay, the latter two with a point mass at zero where
    /// the published grid has one.
    pub fn mlp() -> SearchSpace {
        SearchSpace::new(vec![
            ("n_layers".into(), uniform_int(1, 8)),
            ("layer_size".into(), uniform_int(1, 512)),
            (
                "dropout".into(),
                choice_with_zero(uniform(0.0, MAX_DROPOUT)),
            ),
            ("lr".into(), loguniform(1e-5, 1e-2)),
            (
                "weight_decay".into(),
                choice_with_zero(loguniform(1e-6, 1e-3)),
            ),
        ])
        .expect("static space is well formed")
    }

    /// Gradient-boosted-trees tuning space, optionally with a name
    /// prefix so it can coexist with a downstream model's space.
    pub fn gbdt_with_prefix(prefix: &str) -> SearchSpace {
        SearchSpace::new(vec![
            (format!("{prefix}max_depth"), uniform_int(3, 10)),
            (format!("{prefix}min_child_weight"), loguniform(1e-8, 1e5)),
            (format!("{prefix}subsample"), uniform(0.5, 1.0)),
            (format!("{prefix}learning_rate"), loguniform(1e-5, 1.0)),
            (format!("{prefix}colsample_bytree"), uniform(0.5, 1.0)),
            (
                format!("{prefix}gamma"),
                choice_with_zero(loguniform(1e-8, 1e2)),
            ),
            (
                format!("{prefix}lambda"),
                choice_with_zero(loguniform(1e-8, 1e2)),
            ),
        ])
        .expect("static space is well formed")
    }

    pub fn gbdt() -> SearchSpace {
        SearchSpace::gbdt_with_prefix("")
    }

    /// Random-forest space for the selection phase.
    pub fn random_forest_fs() -> SearchSpace {
        SearchSpace::new(vec![
            ("fs_n_estimators".into(), uniform_int(10, 2000)),
            ("fs_max_depth".into(), uniform_int(3, 10)),
        ])
        .expect("static space is well formed")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds;

    #[test]
    fn bounds_are_validated() {
        assert!(uniform(0.0, 1.0).validate().is_ok());
        assert!(uniform(1.0, 1.0).validate().is_err());
        assert!(uniform(2.0, 1.0).validate().is_err());
        assert!(uniform(f64::NAN, 1.0).validate().is_err());
        assert!(loguniform(0.0, 1.0).validate().is_err());
        assert!(loguniform(-1.0, 1.0).validate().is_err());
        assert!(uniform_int(8, 8).validate().is_err());
        assert!(choice_with_zero(loguniform(3.0, 2.0)).validate().is_err());
    }

    #[test]
    fn uniform_int_stays_in_range() {
        let p = uniform_int(1, 8);
        let mut rng = seeds::stream_rng(7, "space-test", &[0]);
        let mut seen = [false; 9];
        for _ in 0..2000 {
            let v = p.sample(&mut rng);
            assert_eq!(v.fract(), 0.0);
            assert!((1.0..=8.0).contains(&v));
            seen[v as usize] = true;
        }
        assert!(seen[1..].iter().all(|&s| s), "all 8 values should occur");
    }

    #[test]
    fn loguniform_median_sits_at_log_midpoint() {
        // For loguniform[1e-5, 1e-2] the log midpoint is 10^-3.5, so
        // about half of all draws fall below it.
        let p = loguniform(1e-5, 1e-2);
        let mut rng = seeds::stream_rng(7, "space-test", &[1]);
        let n = 10_000;
        let below = (0..n)
            .filter(|_| p.sample(&mut rng) < 10f64.powf(-3.5))
            .count();
        let frac = below as f64 / n as f64;
        assert!((frac - 0.5).abs() <= 0.02, "fraction below midpoint {frac}");
    }

    #[test]
    fn choice_with_zero_is_half_zeros() {
        let p = choice_with_zero(loguniform(1e-6, 1e-3));
        let mut rng = seeds::stream_rng(7, "space-test", &[2]);
        let n = 10_000;
        let zeros = (0..n).filter(|_| p.sample(&mut rng) == 0.0).count();
        let frac = zeros as f64 / n as f64;
        assert!((frac - 0.5).abs() <= 0.02, "zero fraction {frac}");
        let mut rng = seeds::stream_rng(7, "space-test", &[3]);
        for _ in 0..200 {
            let v = p.sample(&mut rng);
            assert!(v == 0.0 || (1e-6..=1e-3).contains(&v));
        }
    }

    #[test]
    fn samples_respect_declared_bounds() {
        let space = SearchSpace::mlp();
        let mut rng = seeds::stream_rng(7, "space-test", &[4]);
        for _ in 0..500 {
            let draw = space.sample(&mut rng);
            assert_eq!(draw.len(), space.params().len());
            for (name, param) in space.params() {
                assert!(param.contains(draw[name]), "{name}={} escaped", draw[name]);
            }
        }
    }

    #[test]
    fn sampling_is_deterministic_per_stream() {
        let space = SearchSpace::gbdt();
        let a = space.sample(&mut seeds::stream_rng(9, "trial-params", &[3]));
        let b = space.sample(&mut seeds::stream_rng(9, "trial-params", &[3]));
        let c = space.sample(&mut seeds::stream_rng(9, "trial-params", &[4]));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn duplicate_names_are_rejected() {
        let mut space = SearchSpace::mlp();
        let err = space.push("lr", uniform(0.0, 1.0)).unwrap_err();
        assert!(matches!(err, BenchError::BadSpace(_)));
    }

    #[test]
    fn merge_keeps_existing_and_adds_new() {
        let mut space = SearchSpace::mlp();
        let before = space.get("lr").cloned().unwrap();
        space.merge(&SearchSpace::random_forest_fs()).unwrap();
        assert_eq!(space.get("lr"), Some(&before));
        assert!(space.get("fs_n_estimators").is_some());
        assert_eq!(space.params().len(), 7);
    }

    #[test]
    fn spaces_serialize_round_trip() {
        let space = SearchSpace::gbdt_with_prefix("fs_");
        let text = serde_json::to_string(&space).unwrap();
        let back: SearchSpace = serde_json::from_str(&text).unwrap();
        assert_eq!(space, back);
    }
}
