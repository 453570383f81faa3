//! Uncertainty-aware boosted ensembles of heteroscedastic neural regressors.
//!
//! Each base learner predicts a Gaussian (mean and standard deviation) for its
//! own input modality. Learners are trained in sequence; every stage after the
//! first weights its per-sample loss by the previous learner's predictive
//! standard deviation (or absolute error, for the vanilla variant), and the
//! final prediction fuses the learners' means, optionally weighted by inverse
//! predicted standard deviation.

pub mod analysis;
pub mod cli;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod experiment;
pub mod features;
pub mod linalg;
pub mod nn;
pub mod seed;

pub use error::{Error, ErrorKind, Result};
