//! The comparison protocol: individual learners, vanilla and uncertainty-aware
//! ensembles, repeated over seeds on one fixed split.
//!
//! For each seed the three learners are first trained alone on uniform
//! weights. The first learner in the order doubles as stage one of both
//! ensembles, so the vanilla and uncertainty-aware runs differ only from
//! stage two on.

use serde::{Deserialize, Serialize};

use crate::analysis::{rmse, run_seeds, EntropyReport, EvalReport, KdeSpec, ResultRow};
use crate::data::{learner_config, split, Dataset, LearnerSpec, Modality, Split, SplitSpec};
use crate::ensemble::{
    continue_ensemble, fuse_stages, train_learner, BoostMode, BoostedEnsemble, FusionRule, TrainedLearner,
    WeightChain,
};
use crate::error::{Error, Result};
use crate::nn::{GaussianPrediction, TrainConfig};
use crate::seed::derive_seed;

/// Ascending individual error on the reference corpus.
pub const DEFAULT_ORDER: [Modality; 3] = [Modality::Disfluency, Modality::Interventions, Modality::Acoustic];

pub const DEFAULT_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

/// Parses `a,b,c` into a full modality permutation.
pub fn parse_order(text: &str) -> Result<Vec<Modality>> {
    let order = text
        .split(',')
        .map(|s| s.trim().parse::<Modality>())
        .collect::<Result<Vec<_>>>()?;
    validate_order(&order)?;
    Ok(order)
}

pub fn validate_order(order: &[Modality]) -> Result<()> {
    let mut sorted = order.to_vec();
    sorted.sort();
    sorted.dedup();
    if order.len() != Modality::ALL.len() || sorted.len() != order.len() {
        let names: Vec<&str> = order.iter().map(|m| m.as_str()).collect();
        return Err(Error::Config(format!(
            "order must be a permutation of disfluency,interventions,acoustic (got {})",
            names.join(",")
        )));
    }
    Ok(())
}

/// Learner specs for `order` with network seeds derived from `run_seed`.
pub fn learner_specs(order: &[Modality], run_seed: u64) -> Vec<LearnerSpec> {
    order
        .iter()
        .map(|&modality| LearnerSpec {
            modality,
            config: learner_config(modality).with_seed(derive_seed(run_seed, 100 + modality.tag())),
        })
        .collect()
}

/// The split a dataset is evaluated on: its recorded one, else `fallback`.
pub fn dataset_split(dataset: &Dataset, fallback: &SplitSpec) -> Result<(SplitSpec, Split)> {
    let spec = dataset.split.unwrap_or(*fallback);
    Ok((spec, split(dataset.len(), &spec)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub order: Vec<Modality>,
    pub train: TrainConfig,
    /// Used when the dataset carries no split of its own.
    pub split: SplitSpec,
    pub chain: WeightChain,
    pub kde: KdeSpec,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            order: DEFAULT_ORDER.to_vec(),
            train: TrainConfig::default(),
            split: SplitSpec::default(),
            chain: WeightChain::Previous,
            kde: KdeSpec::default(),
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        validate_order(&self.order)?;
        self.train.validate()?;
        self.split.validate()?;
        self.kde.validate()
    }
}

/// Trains one ensemble for `run_seed`.
pub fn train_one(
    dataset: &Dataset,
    split: &Split,
    order: &[Modality],
    mode: BoostMode,
    fusion: FusionRule,
    chain: WeightChain,
    tc: &TrainConfig,
    run_seed: u64,
) -> Result<BoostedEnsemble> {
    let specs = learner_specs(order, run_seed);
    let tc = tc.clone().with_seed(run_seed);
    crate::ensemble::train_ensemble(dataset, split, &specs, mode, fusion, chain, &tc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    Individual(Modality),
    Vanilla,
    Ua,
    UaWeighted,
}

impl Method {
    pub fn name(self) -> String {
        match self {
            Method::Individual(m) => m.as_str().to_string(),
            Method::Vanilla => "vanilla_ensemble".into(),
            Method::Ua => "ua_ensemble".into(),
            Method::UaWeighted => "ua_ensemble_weighted".into(),
        }
    }

    pub fn mode(self) -> &'static str {
        match self {
            Method::Individual(_) => "none",
            Method::Vanilla => BoostMode::Vanilla.as_str(),
            Method::Ua | Method::UaWeighted => BoostMode::Ua.as_str(),
        }
    }

    pub fn fusion(self) -> &'static str {
        match self {
            Method::Individual(_) => "none",
            Method::Vanilla | Method::Ua => FusionRule::Mean.as_str(),
            Method::UaWeighted => FusionRule::InverseSigma.as_str(),
        }
    }
}

/// Everything one seed of the protocol produces on the test split.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedOutcome {
    pub seed: u64,
    pub test_indices: Vec<usize>,
    /// Individual learners in protocol order, trained on uniform weights.
    pub individual: Vec<TrainedLearner>,
    pub vanilla: BoostedEnsemble,
    pub ua: BoostedEnsemble,
    /// `[learner][sample]` test predictions of the individual learners.
    pub individual_predictions: Vec<Vec<GaussianPrediction>>,
    /// `[stage][sample]` test predictions per ensemble.
    pub vanilla_predictions: Vec<Vec<GaussianPrediction>>,
    pub ua_predictions: Vec<Vec<GaussianPrediction>>,
    pub rmse: Vec<(Method, f64)>,
}

impl SeedOutcome {
    pub fn rmse_of(&self, method: Method) -> Option<f64> {
        self.rmse.iter().find(|(m, _)| *m == method).map(|&(_, v)| v)
    }
}

/// Runs the full protocol for one seed. Only the training and validation
/// rows are used for fitting; test rows are only predicted.
pub fn run_seed(dataset: &Dataset, split: &Split, cfg: &ProtocolConfig, seed: u64) -> Result<SeedOutcome> {
    cfg.validate()?;
    let specs = learner_specs(&cfg.order, seed);
    let tc = cfg.train.clone().with_seed(seed);
    let uniform = vec![1.0; split.train.len()];
    let individual = specs
        .iter()
        .map(|spec| train_learner(dataset, split, spec, &uniform, &tc))
        .collect::<Result<Vec<_>>>()?;

    let ensemble = |mode| {
        continue_ensemble(
            dataset,
            split,
            individual[0].clone(),
            &specs[1..],
            mode,
            FusionRule::Mean,
            cfg.chain,
            &tc,
        )
    };
    let vanilla = ensemble(BoostMode::Vanilla)?;
    let ua = ensemble(BoostMode::Ua)?;

    let test = &split.test;
    let targets = dataset.labels_at(test);
    let individual_predictions = individual
        .iter()
        .map(|l| l.predict_indices(dataset, test))
        .collect::<Result<Vec<_>>>()?;
    let vanilla_predictions = vanilla.stage_predictions(dataset, test)?;
    let ua_predictions = ua.stage_predictions(dataset, test)?;

    let mut scores = Vec::new();
    for (l, preds) in individual.iter().zip(&individual_predictions) {
        let mu: Vec<f64> = preds.iter().map(|p| p.mu).collect();
        scores.push((Method::Individual(l.modality), rmse(&mu, &targets)?));
    }
    scores.push((Method::Vanilla, rmse(&fuse_stages(&vanilla_predictions, FusionRule::Mean)?, &targets)?));
    scores.push((Method::Ua, rmse(&fuse_stages(&ua_predictions, FusionRule::Mean)?, &targets)?));
    scores.push((
        Method::UaWeighted,
        rmse(&fuse_stages(&ua_predictions, FusionRule::InverseSigma)?, &targets)?,
    ));

    Ok(SeedOutcome {
        seed,
        test_indices: test.clone(),
        individual,
        vanilla,
        ua,
        individual_predictions,
        vanilla_predictions,
        ua_predictions,
        rmse: scores,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareOutcome {
    pub split: SplitSpec,
    pub seeds: Vec<u64>,
    pub per_seed: Vec<SeedOutcome>,
    pub rows: Vec<ResultRow>,
    /// Vanilla then uncertainty-aware, test entropies pooled over seeds.
    pub entropy: Vec<EntropyReport>,
}

impl CompareOutcome {
    pub fn row(&self, method: Method) -> Option<&ResultRow> {
        let name = method.name();
        self.rows.iter().find(|r| r.method == name)
    }
}

fn pooled_entropy(
    per_seed: &[SeedOutcome],
    mode: BoostMode,
    order: &[Modality],
    kde: &KdeSpec,
    pick: impl Fn(&SeedOutcome) -> &Vec<Vec<GaussianPrediction>>,
) -> Result<EntropyReport> {
    let pooled: Vec<Vec<GaussianPrediction>> = (0..order.len())
        .map(|k| per_seed.iter().flat_map(|o| pick(o)[k].iter().copied()).collect())
        .collect();
    EntropyReport::from_predictions(mode, order.to_vec(), &pooled, kde)
}

/// Runs [`run_seed`] for every seed (up to `jobs` at a time) and aggregates.
pub fn compare(dataset: &Dataset, cfg: &ProtocolConfig, seeds: &[u64], jobs: usize) -> Result<CompareOutcome> {
    cfg.validate()?;
    if seeds.len() < 2 {
        return Err(Error::Config(format!("compare needs at least 2 seeds, got {}", seeds.len())));
    }
    let (spec, parts) = dataset_split(dataset, &cfg.split)?;
    let per_seed = run_seeds(seeds, jobs, |seed| run_seed(dataset, &parts, cfg, seed))?;

    let mut methods: Vec<Method> = cfg.order.iter().map(|&m| Method::Individual(m)).collect();
    methods.extend([Method::Vanilla, Method::Ua, Method::UaWeighted]);
    let rows = methods
        .into_iter()
        .map(|method| {
            let values = per_seed
                .iter()
                .map(|o| o.rmse_of(method).expect("every method scored"))
                .collect();
            Ok(ResultRow {
                method: method.name(),
                mode: method.mode().into(),
                fusion: method.fusion().into(),
                report: EvalReport::from_values(seeds.to_vec(), values)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let entropy = vec![
        pooled_entropy(&per_seed, BoostMode::Vanilla, &cfg.order, &cfg.kde, |o| &o.vanilla_predictions)?,
        pooled_entropy(&per_seed, BoostMode::Ua, &cfg.order, &cfg.kde, |o| &o.ua_predictions)?,
    ];
    Ok(CompareOutcome {
        split: spec,
        seeds: seeds.to_vec(),
        per_seed,
        rows,
        entropy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_parsing() {
        assert_eq!(parse_order("disfluency,interventions,acoustic").unwrap(), DEFAULT_ORDER.to_vec());
        let err = parse_order("acoustic,acoustic,disfluency").unwrap_err();
        assert!(err.to_string().contains("order must be a permutation"));
        assert!(parse_order("acoustic,disfluency").is_err());
        assert!(parse_order("acoustic,disfluency,video").is_err());
    }

    #[test]
    fn method_labels() {
        assert_eq!(Method::UaWeighted.fusion(), "inverse_sigma");
        assert_eq!(Method::Vanilla.fusion(), "mean");
        assert_eq!(Method::Individual(Modality::Acoustic).name(), "acoustic");
    }

    #[test]
    fn seeds_give_distinct_networks() {
        let a = learner_specs(&DEFAULT_ORDER, 0);
        let b = learner_specs(&DEFAULT_ORDER, 1);
        assert_ne!(a[0].config.seed, b[0].config.seed);
        assert_ne!(a[0].config.seed, a[1].config.seed);
    }
}
