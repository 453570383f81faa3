//! Datasets, splits, the synthetic generator, corpus loaders and the three
//! base-learner architectures.

pub mod dataset;
pub mod learners;
pub mod load;
pub mod split;
pub mod synth;

pub use dataset::{Dataset, Modality, SyntheticTruth, DATASET_FORMAT, DATASET_VERSION};
pub use learners::{default_learner_configs, learner_config, LearnerSpec};
pub use load::{
    extract_dataset, load_feature_csv, load_labels_csv, load_transcript_dir, FeaturePipeline, FeatureTable,
};
pub use split::{split, split_counts, Split, SplitSpec, DEFAULT_TEST_FRACTION, DEFAULT_VAL_FRACTION};
pub use synth::{conditional_mean, synthesize, NoiseProfile, SyntheticSpec};
