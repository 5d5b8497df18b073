//! Nonparametric spot-volatility inference for pure-jump semimartingales
//! driven by a symmetric β-stable process.
//!
//! * [`stable`]: stable laws, sampling and the closed-form moment/scale constants
//! * [`path`]: simulation of the price model with two-factor CIR variance
//! * [`estimators`]: block estimators of the scaled spot volatility
//! * [`activity`]: estimators of the activity index β
//! * [`inference`]: coupling quantile tables and confidence intervals
//! * [`harness`]: Monte Carlo experiments (histograms, KS tables, coverage)

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod activity;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod inference;
pub mod io;
pub mod ks;
pub mod par;
pub mod path;
pub mod rng;
pub mod stable;

pub use error::{Error, Result};
