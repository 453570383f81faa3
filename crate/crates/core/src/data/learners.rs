use serde::{Deserialize, Serialize};

use super::dataset::Modality;
use crate::features::{DISFLUENCY_DIM, PCA_COMPONENTS, SEQUENCE_LEN, TOKEN_DIM};
use crate::nn::NetworkConfig;

/// A base learner: the architecture bound to the modality it reads.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LearnerSpec {
    pub modality: Modality,
    pub config: NetworkConfig,
}

pub fn learner_config(modality: Modality) -> NetworkConfig {
    match modality {
        // Projects the 11 rates up to 24 units, then 16.
        Modality::Disfluency => NetworkConfig::feedforward(vec![DISFLUENCY_DIM, 24, 16], 0),
        // Single hidden layer over the 21 component scores.
        Modality::Acoustic => NetworkConfig::feedforward(vec![PCA_COMPONENTS, 16], 0),
        // One-hot speaker tokens through a 16-unit recurrent cell.
        Modality::Interventions => NetworkConfig::recurrent(vec![TOKEN_DIM, 16], Some(SEQUENCE_LEN), 0),
    }
}

/// Disfluency, acoustic and interventions learners, in that order.
pub fn default_learner_configs() -> [LearnerSpec; 3] {
    Modality::ALL.map(|modality| LearnerSpec {
        modality,
        config: learner_config(modality),
    })
}
