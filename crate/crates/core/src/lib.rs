//! Predicting how many cows seek shade from temperature-humidity features.
//!
//! The pipeline: [`dataset`] ingests sensor logs and groups them into days,
//! [`features`] derives the four model inputs, [`tree`], [`forest`] and [`nn`]
//! fit regressors, and [`eval`] runs day-grouped cross-validation. [`synth`]
//! generates farm-like data and hosts the brute-force oracles used in tests.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod features;
pub mod forest;
pub mod model;
pub mod nn;
pub mod numeric;
pub mod rng;
pub mod samples;
pub mod synth;
pub mod tree;

pub use error::{Error, Result};
