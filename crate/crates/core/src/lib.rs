//! Feature selection for tabular learning.
//!
//! The crate trains small neural networks and tree ensembles on tabular
//! data, scores input features with gradient-based and classical
//! selectors, and benchmarks how downstream models behave when datasets
//! are padded with extraneous features. Everything is seeded: two runs
//! with the same master seed produce byte-identical result logs.

pub mod autodiff;
pub mod bench;
pub mod data;
pub mod nn;
pub mod seeds;
pub mod selectors;
pub mod stats;
pub mod trees;
