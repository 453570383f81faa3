//! Sequential boosting of modality learners and prediction fusion.
//!
//! Stage one trains on uniform sample weights. Every later stage trains on
//! weights computed from the previous stage's predictions on the training
//! split: the predicted standard deviation in uncertainty-aware mode, or the
//! absolute error in vanilla mode. Raw weights are floored at
//! [`WEIGHT_FLOOR`] and rescaled to mean one.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, LearnerSpec, Modality, Split, SplitSpec};
use crate::error::{Error, Result};
use crate::nn::{train, GaussianPrediction, Input, LabeledSet, Network, TrainConfig, TrainingLog};
use crate::seed::derive_seed;

pub const WEIGHT_FLOOR: f64 = 1e-3;

pub const ENSEMBLE_FORMAT: &str = "uaboost-ensemble";
pub const ENSEMBLE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoostMode {
    /// Weights from per-sample absolute error of the previous learner.
    Vanilla,
    /// Weights from the previous learner's predicted standard deviation.
    Ua,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionRule {
    Mean,
    InverseSigma,
}

/// How stage weights relate to earlier stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightChain {
    /// Only the immediately preceding learner.
    #[default]
    Previous,
    /// Product of all stage weights so far, renormalised.
    Cumulative,
}

impl BoostMode {
    pub fn as_str(self) -> &'static str {
        match self {
            BoostMode::Vanilla => "vanilla",
            BoostMode::Ua => "ua",
        }
    }
}

impl FusionRule {
    pub fn as_str(self) -> &'static str {
        match self {
            FusionRule::Mean => "mean",
            FusionRule::InverseSigma => "inverse_sigma",
        }
    }
}

impl fmt::Display for BoostMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for FusionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoostMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vanilla" => Ok(BoostMode::Vanilla),
            "ua" => Ok(BoostMode::Ua),
            other => Err(Error::Config(format!("unknown boost mode `{other}`"))),
        }
    }
}

impl FromStr for FusionRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(FusionRule::Mean),
            "inverse-sigma" | "inverse_sigma" => Ok(FusionRule::InverseSigma),
            other => Err(Error::Config(format!("unknown fusion rule `{other}`"))),
        }
    }
}

/// Per-sample loss weights for the next stage, floored and normalised to mean 1.
pub fn compute_boost_weights(preds: &[GaussianPrediction], targets: &[f64], mode: BoostMode) -> Result<Vec<f64>> {
    if preds.is_empty() {
        return Err(Error::Data("no predictions to weight".into()));
    }
    if preds.len() != targets.len() {
        return Err(Error::mismatch(
            format!("{} targets", preds.len()),
            format!("{} targets", targets.len()),
        ));
    }
    let raw: Vec<f64> = preds
        .iter()
        .zip(targets)
        .map(|(p, &y)| match mode {
            BoostMode::Ua => p.sigma,
            BoostMode::Vanilla => (y - p.mu).abs(),
        })
        .map(|r| r.max(WEIGHT_FLOOR))
        .collect();
    if raw.iter().any(|r| !r.is_finite()) {
        return Err(Error::Domain("non-finite boost weight".into()));
    }
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    Ok(raw.into_iter().map(|r| r / mean).collect())
}

/// Fuses learner predictions into one value.
///
/// `InverseSigma` is the weighted mean with weights `1 / sigma_i`, evaluated
/// as `sigma_min / sigma_i` so that equal sigmas reduce exactly to the plain
/// mean. The result is clamped to the hull of the input means.
pub fn fuse(preds: &[GaussianPrediction], rule: FusionRule) -> Result<f64> {
    if preds.is_empty() {
        return Err(Error::Data("cannot fuse an empty prediction list".into()));
    }
    if let Some(p) = preds.iter().find(|p| !(p.sigma > 0.0)) {
        return Err(Error::Domain(format!("sigma must be positive, got {}", p.sigma)));
    }
    let lo = preds.iter().map(|p| p.mu).fold(f64::INFINITY, f64::min);
    let hi = preds.iter().map(|p| p.mu).fold(f64::NEG_INFINITY, f64::max);
    let value = match rule {
        FusionRule::Mean => preds.iter().map(|p| p.mu).sum::<f64>() / preds.len() as f64,
        FusionRule::InverseSigma => {
            let min_sigma = preds.iter().map(|p| p.sigma).fold(f64::INFINITY, f64::min);
            let (num, den) = preds.iter().fold((0.0, 0.0), |(num, den), p| {
                let w = min_sigma / p.sigma;
                (num + w * p.mu, den + w)
            });
            num / den
        }
    };
    Ok(value.clamp(lo, hi))
}

/// Inputs for one sample, keyed by modality.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModalityInputs(BTreeMap<Modality, Input>);

impl ModalityInputs {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, modality: Modality, input: Input) -> Self {
        self.0.insert(modality, input);
        self
    }

    pub fn insert(&mut self, modality: Modality, input: Input) {
        self.0.insert(modality, input);
    }

    pub fn get(&self, modality: Modality) -> Option<&Input> {
        self.0.get(&modality)
    }

    pub fn from_dataset(dataset: &Dataset, index: usize) -> Self {
        Self(Modality::ALL.iter().map(|&m| (m, dataset.input(m, index))).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedLearner {
    pub modality: Modality,
    pub network: Network,
    pub log: TrainingLog,
    /// Shuffle seed the learner was trained with.
    pub train_seed: u64,
}

impl TrainedLearner {
    pub fn predict_indices(&self, dataset: &Dataset, indices: &[usize]) -> Result<Vec<GaussianPrediction>> {
        indices
            .iter()
            .map(|&i| self.network.predict(&dataset.input(self.modality, i)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoostedEnsemble {
    /// Learners in training order.
    pub learners: Vec<TrainedLearner>,
    pub mode: BoostMode,
    pub fusion: FusionRule,
    pub chain: WeightChain,
    /// Stage k holds the training-split sample weights stage k was fitted
    /// with; stage 0 is uniform.
    pub weight_history: Vec<Vec<f64>>,
}

/// Trains one learner on the training split with the given sample weights,
/// monitoring the validation split. The shuffle seed is derived from
/// `tc.seed` and the modality, so equal inputs give equal learners.
pub fn train_learner(
    dataset: &Dataset,
    split: &Split,
    spec: &LearnerSpec,
    weights: &[f64],
    tc: &TrainConfig,
) -> Result<TrainedLearner> {
    let train_inputs = dataset.inputs(spec.modality, &split.train);
    let train_targets = dataset.labels_at(&split.train);
    let val_inputs = dataset.inputs(spec.modality, &split.val);
    let val_targets = dataset.labels_at(&split.val);
    let train_seed = derive_seed(tc.seed, spec.modality.tag());
    let tc = tc.clone().with_seed(train_seed);
    let (network, log) = train(
        &spec.config,
        LabeledSet::new(&train_inputs, &train_targets)?,
        LabeledSet::new(&val_inputs, &val_targets)?,
        weights,
        &tc,
    )
    .map_err(|e| match e {
        Error::Config(m) => Error::Config(m),
        Error::Training(m) => Error::Training(format!("{} learner: {m}", spec.modality)),
        other => Error::Training(format!("{} learner: {other}", spec.modality)),
    })?;
    Ok(TrainedLearner {
        modality: spec.modality,
        network,
        log,
        train_seed,
    })
}

fn check_order(specs: &[LearnerSpec]) -> Result<()> {
    if specs.is_empty() {
        return Err(Error::Config("an ensemble needs at least one learner".into()));
    }
    let mut seen = std::collections::BTreeSet::new();
    if let Some(dup) = specs.iter().find(|s| !seen.insert(s.modality)) {
        return Err(Error::Config(format!("modality `{}` appears twice in the learner order", dup.modality)));
    }
    Ok(())
}

fn next_weights(
    previous: &TrainedLearner,
    prior: &[f64],
    dataset: &Dataset,
    split: &Split,
    mode: BoostMode,
    chain: WeightChain,
) -> Result<Vec<f64>> {
    let preds = previous.predict_indices(dataset, &split.train)?;
    let targets = dataset.labels_at(&split.train);
    let w = compute_boost_weights(&preds, &targets, mode)?;
    Ok(match chain {
        WeightChain::Previous => w,
        WeightChain::Cumulative => {
            let product: Vec<f64> = w.iter().zip(prior).map(|(a, b)| a * b).collect();
            let mean = product.iter().sum::<f64>() / product.len() as f64;
            product.into_iter().map(|p| p / mean).collect()
        }
    })
}

/// Trains the learners in order, boosting each stage from the previous one.
pub fn train_ensemble(
    dataset: &Dataset,
    split: &Split,
    specs: &[LearnerSpec],
    mode: BoostMode,
    fusion: FusionRule,
    chain: WeightChain,
    tc: &TrainConfig,
) -> Result<BoostedEnsemble> {
    check_order(specs)?;
    let uniform = vec![1.0; split.train.len()];
    let first = train_learner(dataset, split, &specs[0], &uniform, tc)?;
    continue_ensemble(dataset, split, first, &specs[1..], mode, fusion, chain, tc)
}

/// Like [`train_ensemble`] but starts from an already trained, uniformly
/// weighted first stage.
#[allow(clippy::too_many_arguments)]
pub fn continue_ensemble(
    dataset: &Dataset,
    split: &Split,
    first: TrainedLearner,
    rest: &[LearnerSpec],
    mode: BoostMode,
    fusion: FusionRule,
    chain: WeightChain,
    tc: &TrainConfig,
) -> Result<BoostedEnsemble> {
    if rest.iter().any(|s| s.modality == first.modality) {
        return Err(Error::Config(format!(
            "modality `{}` appears twice in the learner order",
            first.modality
        )));
    }
    if !rest.is_empty() {
        check_order(rest)?;
    }
    let mut weight_history = vec![vec![1.0; split.train.len()]];
    let mut learners = vec![first];
    for spec in rest {
        let prev = learners.last().expect("first stage present");
        let prior = weight_history.last().expect("stage 0 present");
        let weights = next_weights(prev, prior, dataset, split, mode, chain)?;
        let learner = train_learner(dataset, split, spec, &weights, tc)?;
        weight_history.push(weights);
        learners.push(learner);
    }
    Ok(BoostedEnsemble {
        learners,
        mode,
        fusion,
        chain,
        weight_history,
    })
}

impl BoostedEnsemble {
    pub fn order(&self) -> Vec<Modality> {
        self.learners.iter().map(|l| l.modality).collect()
    }

    pub fn with_fusion(&self, fusion: FusionRule) -> Self {
        Self {
            fusion,
            ..self.clone()
        }
    }

    /// Fused value plus every learner's prediction, in training order.
    pub fn predict(&self, inputs: &ModalityInputs) -> Result<(f64, Vec<GaussianPrediction>)> {
        let per_learner = self
            .learners
            .iter()
            .map(|l| {
                let input = inputs
                    .get(l.modality)
                    .ok_or_else(|| Error::Data(format!("missing input for modality `{}`", l.modality)))?;
                l.network.predict(input)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((fuse(&per_learner, self.fusion)?, per_learner))
    }

    /// `[stage][sample]` predictions over dataset rows.
    pub fn stage_predictions(&self, dataset: &Dataset, indices: &[usize]) -> Result<Vec<Vec<GaussianPrediction>>> {
        self.learners.iter().map(|l| l.predict_indices(dataset, indices)).collect()
    }

    pub fn predict_indices(&self, dataset: &Dataset, indices: &[usize]) -> Result<Vec<f64>> {
        let stages = self.stage_predictions(dataset, indices)?;
        fuse_stages(&stages, self.fusion)
    }
}

/// Fuses `[stage][sample]` predictions sample by sample.
pub fn fuse_stages(stages: &[Vec<GaussianPrediction>], rule: FusionRule) -> Result<Vec<f64>> {
    let n = stages.first().map_or(0, Vec::len);
    (0..n)
        .map(|i| {
            let column: Vec<GaussianPrediction> = stages.iter().map(|s| s[i]).collect();
            fuse(&column, rule)
        })
        .collect()
}

pub fn predict_ensemble(ens: &BoostedEnsemble, inputs: &ModalityInputs) -> Result<(f64, Vec<GaussianPrediction>)> {
    ens.predict(inputs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LearnerEntry {
    modality: Modality,
    file: String,
    train_seed: u64,
    best_epoch: usize,
    epochs_run: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Manifest {
    format: String,
    version: u32,
    mode: BoostMode,
    fusion: FusionRule,
    chain: WeightChain,
    order: Vec<Modality>,
    learners: Vec<LearnerEntry>,
    weight_history: Vec<Vec<f64>>,
    #[serde(default)]
    split: Option<SplitSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    run_config: Option<serde_json::Value>,
}

/// Provenance stored next to the learners in a bundle manifest.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BundleInfo {
    /// Split the ensemble was trained on.
    pub split: Option<SplitSpec>,
    pub run_config: Option<serde_json::Value>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

impl BoostedEnsemble {
    /// Writes `manifest.json` plus one parameter file per learner into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>, info: &BundleInfo) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut entries = Vec::new();
        for (k, l) in self.learners.iter().enumerate() {
            let file = format!("learner_{}_{}.model", k + 1, l.modality);
            l.network.save(dir.join(&file))?;
            entries.push(LearnerEntry {
                modality: l.modality,
                file,
                train_seed: l.train_seed,
                best_epoch: l.log.best_epoch,
                epochs_run: l.log.epochs.len().saturating_sub(1),
            });
        }
        let manifest = Manifest {
            format: ENSEMBLE_FORMAT.into(),
            version: ENSEMBLE_VERSION,
            mode: self.mode,
            fusion: self.fusion,
            chain: self.chain,
            order: self.order(),
            learners: entries,
            weight_history: self.weight_history.clone(),
            split: info.split,
            run_config: info.run_config.clone(),
        };
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::format(&path, e))?;
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }

    /// Loads a bundle written by [`BoostedEnsemble::save`]. Training logs are
    /// not persisted; loaded learners carry only their best epoch.
    pub fn load(dir: impl AsRef<Path>) -> Result<(Self, BundleInfo)> {
        let dir = dir.as_ref();
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::format(&path, e))?;
        if manifest.format != ENSEMBLE_FORMAT || manifest.version != ENSEMBLE_VERSION {
            return Err(Error::format(
                &path,
                format!("unsupported bundle `{}` v{}", manifest.format, manifest.version),
            ));
        }
        let learners = manifest
            .learners
            .iter()
            .map(|e| {
                Ok(TrainedLearner {
                    modality: e.modality,
                    network: Network::load(dir.join(&e.file))?,
                    log: TrainingLog {
                        epochs: Vec::new(),
                        best_epoch: e.best_epoch,
                    },
                    train_seed: e.train_seed,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let ens = Self {
            learners,
            mode: manifest.mode,
            fusion: manifest.fusion,
            chain: manifest.chain,
            weight_history: manifest.weight_history,
        };
        Ok((
            ens,
            BundleInfo {
                split: manifest.split,
                run_config: manifest.run_config,
            },
        ))
    }
}
