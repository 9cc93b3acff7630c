//! Sub-sample time-of-flight localization of pulse echoes.
//!
//! A 1-D convolutional network maps an `N`-sample A-scan to an `N * R`
//! score sequence whose peaks mark echo arrivals at `1/R`-sample
//! resolution. The crate contains the signal utilities, synthetic data,
//! the network with its training loop, detection, classical baselines and
//! the evaluation harness behind the `stofnet` command line tool.

pub mod baselines;
pub mod cli;
pub mod dataset;
pub mod detection;
pub mod error;
pub mod evaluation;
pub mod model;
pub mod seed;
pub mod signal;
pub mod training;

pub use error::{Error, Result};
