use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::split::SplitSpec;
use crate::error::{Error, Result};
use crate::features::{InterventionSequence, DISFLUENCY_DIM, PCA_COMPONENTS};
use crate::nn::Input;

pub const DATASET_FORMAT: &str = "uaboost-dataset";
pub const DATASET_VERSION: u32 = 1;

/// Input modality, one per base learner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Disfluency,
    Acoustic,
    Interventions,
}

impl Modality {
    pub const ALL: [Modality; 3] = [Modality::Disfluency, Modality::Acoustic, Modality::Interventions];

    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Disfluency => "disfluency",
            Modality::Acoustic => "acoustic",
            Modality::Interventions => "interventions",
        }
    }

    /// Stable small integer used when deriving per-learner seeds.
    pub fn tag(self) -> u64 {
        match self {
            Modality::Disfluency => 1,
            Modality::Acoustic => 2,
            Modality::Interventions => 3,
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Modality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "disfluency" => Ok(Modality::Disfluency),
            "acoustic" => Ok(Modality::Acoustic),
            "interventions" => Ok(Modality::Interventions),
            other => Err(Error::Config(format!("unknown modality `{other}`"))),
        }
    }
}

/// Ground truth kept by the synthetic generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTruth {
    /// Conditional mean `E[y | x]` per sample.
    pub mean: Vec<f64>,
    /// Noise standard deviation `s(x)` per sample.
    pub noise_std: Vec<f64>,
}

/// Aligned per-subject modalities and labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub subject_ids: Vec<String>,
    /// N x 11, scaled disfluency rates.
    pub disfluency: Vec<Vec<f64>>,
    /// N x 21, acoustic principal component scores.
    pub acoustic: Vec<Vec<f64>>,
    pub interventions: Vec<InterventionSequence>,
    pub labels: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<SyntheticTruth>,
    /// Split the feature scalers were fitted against, when the features were
    /// extracted from raw data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitSpec>,
}

#[derive(Serialize, Deserialize)]
struct Bundle {
    format: String,
    version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config: Option<serde_json::Value>,
    dataset: Dataset,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.labels.len();
        let lens = [
            ("subject_ids", self.subject_ids.len()),
            ("disfluency", self.disfluency.len()),
            ("acoustic", self.acoustic.len()),
            ("interventions", self.interventions.len()),
        ];
        for (name, len) in lens {
            if len != n {
                return Err(Error::Data(format!("{name} has {len} rows but there are {n} labels")));
            }
        }
        if let Some(t) = &self.truth {
            if t.mean.len() != n || t.noise_std.len() != n {
                return Err(Error::Data("synthetic truth is not aligned with labels".into()));
            }
        }
        if let Some(r) = self.disfluency.iter().find(|r| r.len() != DISFLUENCY_DIM) {
            return Err(Error::mismatch(format!("{DISFLUENCY_DIM} disfluency features"), r.len()));
        }
        if let Some(r) = self.acoustic.iter().find(|r| r.len() != PCA_COMPONENTS) {
            return Err(Error::mismatch(format!("{PCA_COMPONENTS} acoustic features"), r.len()));
        }
        if self.labels.iter().any(|y| !y.is_finite()) {
            return Err(Error::Data("labels must be finite".into()));
        }
        Ok(())
    }

    pub fn input(&self, modality: Modality, index: usize) -> Input {
        match modality {
            Modality::Disfluency => Input::Vector(self.disfluency[index].clone()),
            Modality::Acoustic => Input::Vector(self.acoustic[index].clone()),
            Modality::Interventions => Input::Sequence(self.interventions[index].one_hot()),
        }
    }

    pub fn inputs(&self, modality: Modality, indices: &[usize]) -> Vec<Input> {
        indices.iter().map(|&i| self.input(modality, i)).collect()
    }

    pub fn labels_at(&self, indices: &[usize]) -> Vec<f64> {
        indices.iter().map(|&i| self.labels[i]).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        self.to_json_with_config(None)
    }

    /// Bundle text with the producing run's configuration embedded.
    pub fn to_json_with_config(&self, config: Option<&serde_json::Value>) -> Result<String> {
        let bundle = Bundle {
            format: DATASET_FORMAT.into(),
            version: DATASET_VERSION,
            config: config.cloned(),
            dataset: self.clone(),
        };
        serde_json::to_string(&bundle).map_err(|e| Error::Data(format!("serialising dataset: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let bundle: Bundle = serde_json::from_str(text).map_err(|e| Error::Data(format!("dataset bundle: {e}")))?;
        if bundle.format != DATASET_FORMAT {
            return Err(Error::Data(format!("not a dataset bundle (format `{}`)", bundle.format)));
        }
        if bundle.version != DATASET_VERSION {
            return Err(Error::Data(format!("unsupported dataset version {}", bundle.version)));
        }
        bundle.dataset.validate()?;
        Ok(bundle.dataset)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.save_with_config(path, None)
    }

    pub fn save_with_config(&self, path: impl AsRef<Path>, config: Option<&serde_json::Value>) -> Result<()> {
        let path = path.as_ref();
        let text = self.to_json_with_config(config)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::format(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modality_parse_and_display() {
        for m in Modality::ALL {
            assert_eq!(m.to_string().parse::<Modality>().unwrap(), m);
        }
        assert!("audio".parse::<Modality>().is_err());
    }

    #[test]
    fn rejects_foreign_bundles() {
        assert!(Dataset::from_json("{\"format\":\"x\",\"version\":1}").is_err());
        assert!(Dataset::from_json("not json").is_err());
    }
}
