//! Feature pipelines: transcript disfluency rates, speaker-intervention
//! sequences, and standardised PCA over precomputed acoustic vectors.

pub mod disfluency;
pub mod interventions;
pub mod pca;
pub mod transcript;

pub use disfluency::{extract_disfluency, DisfluencyVector, MinMaxScaler, DISFLUENCY_DIM, DISFLUENCY_NAMES};
pub use interventions::{extract_interventions, InterventionSequence, InterventionToken, SEQUENCE_LEN, TOKEN_DIM};
pub use pca::{pca_fit, pca_fit_k, pca_project, PcaModel, PCA_COMPONENTS};
pub use transcript::{parse_transcript, PauseClass, Speaker, Transcript, Utterance};
