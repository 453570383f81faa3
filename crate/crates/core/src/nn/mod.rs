//! Minimal neural-network engine: dense and recurrent layers, a Gaussian
//! output head, exact gradients of the sample-weighted Gaussian NLL, and an
//! Adam training loop.

pub mod adam;
pub mod gaussian;
mod io;
pub mod layers;
pub mod network;
pub mod train;

pub use adam::{AdamState, DEFAULT_LEARNING_RATE};
pub use gaussian::{softplus, weighted_nll, GaussianPrediction, VARIANCE_FLOOR};
pub use io::{MODEL_MAGIC, MODEL_VERSION};
pub use layers::{Activation, DenseLayer, RecurrentCell};
pub use network::{Example, Gradients, Input, Network, NetworkConfig, NetworkKind};
pub use train::{normalize_weights, train, EpochRecord, LabeledSet, TrainConfig, TrainingLog};
