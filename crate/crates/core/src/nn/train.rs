//! Minibatch Adam on the weighted Gaussian NLL with early stopping.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{AdamState, DEFAULT_LEARNING_RATE};
use super::network::{Example, Input, Network, NetworkConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    /// Global gradient-norm clip; `None` disables clipping.
    pub clip_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            learning_rate: DEFAULT_LEARNING_RATE,
            max_epochs: 500,
            patience: 50,
            seed: 0,
            clip_norm: Some(5.0),
        }
    }
}

impl TrainConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if self.max_epochs == 0 {
            return Err(Error::Config("max_epochs must be at least 1".into()));
        }
        if self.patience > self.max_epochs {
            return Err(Error::Config(format!(
                "patience ({}) exceeds max_epochs ({})",
                self.patience, self.max_epochs
            )));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return Err(Error::Config(format!("clip norm must be positive, got {c}")));
            }
        }
        Ok(())
    }
}

/// Borrowed inputs with aligned regression targets.
#[derive(Debug, Clone, Copy)]
pub struct LabeledSet<'a> {
    pub inputs: &'a [Input],
    pub targets: &'a [f64],
}

impl<'a> LabeledSet<'a> {
    pub fn new(inputs: &'a [Input], targets: &'a [f64]) -> Result<Self> {
        if inputs.len() != targets.len() {
            return Err(Error::mismatch(
                format!("{} targets", inputs.len()),
                format!("{} targets", targets.len()),
            ));
        }
        Ok(Self { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_nll: f64,
    pub val_nll: Option<f64>,
}

/// Epoch 0 holds the losses of the untrained network.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
}

impl TrainingLog {
    pub fn monitored(&self, epoch: usize) -> Option<f64> {
        self.epochs
            .get(epoch)
            .map(|r| r.val_nll.unwrap_or(r.train_nll))
    }
}

/// Rescales non-negative weights to mean 1.
pub fn normalize_weights(weights: &[f64]) -> Result<Vec<f64>> {
    if weights.is_empty() {
        return Err(Error::Data("empty weight vector".into()));
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
        return Err(Error::Data(format!("sample weights must be finite and non-negative, got {w}")));
    }
    let mean = weights.iter().sum::<f64>() / weights.len() as f64;
    if mean == 0.0 {
        return Err(Error::Data("sample weights are all zero".into()));
    }
    Ok(weights.iter().map(|w| w / mean).collect())
}

fn mean_nll(net: &Network, set: &LabeledSet<'_>, weights: Option<&[f64]>) -> Result<f64> {
    let batch: Vec<Example<'_>> = set
        .inputs
        .iter()
        .zip(set.targets)
        .enumerate()
        .map(|(i, (input, &target))| Example {
            input,
            target,
            weight: weights.map_or(1.0, |w| w[i]),
        })
        .collect();
    net.batch_loss(&batch)
}

/// Starts the mean output at the weighted target mean, so training does not
/// spend its first epochs walking the bias to label scale.
fn init_mean_bias(net: &mut Network, targets: &[f64], weights: &[f64]) {
    let total: f64 = weights.iter().sum();
    net.head_mut().biases[0] = targets.iter().zip(weights).map(|(y, w)| w * y).sum::<f64>() / total;
}

/// Trains a fresh network from `config`.
///
/// Sample weights are normalised to mean 1 first, so scaling every weight by
/// the same constant does not change the result. Early stopping monitors the
/// unweighted validation NLL, or the weighted training NLL when `val` is
/// empty, and the best snapshot is returned. Weights are Glorot-initialised
/// from the config seed; the mean bias starts at the weighted target mean of
/// the training set.
pub fn train(
    config: &NetworkConfig,
    train_set: LabeledSet<'_>,
    val_set: LabeledSet<'_>,
    sample_weights: &[f64],
    tc: &TrainConfig,
) -> Result<(Network, TrainingLog)> {
    tc.validate()?;
    if train_set.is_empty() {
        return Err(Error::Data("empty training set".into()));
    }
    if sample_weights.len() != train_set.len() {
        return Err(Error::mismatch(
            format!("{} sample weights", train_set.len()),
            format!("{} sample weights", sample_weights.len()),
        ));
    }
    let weights = normalize_weights(sample_weights)?;
    let mut net = Network::new(config.clone())?;
    init_mean_bias(&mut net, train_set.targets, &weights);
    let mut adam = AdamState::new(net.param_count(), tc.learning_rate);
    let mut params = net.flat_params();
    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    let evaluate = |net: &Network, epoch: usize| -> Result<EpochRecord> {
        let train_nll = mean_nll(net, &train_set, Some(&weights))?;
        let val_nll = if val_set.is_empty() {
            None
        } else {
            Some(mean_nll(net, &val_set, None)?)
        };
        Ok(EpochRecord {
            epoch,
            train_nll,
            val_nll,
        })
    };

    let mut log = TrainingLog::default();
    let first = evaluate(&net, 0)?;
    let mut best_score = first.val_nll.unwrap_or(first.train_nll);
    let mut best_params = params.clone();
    log.epochs.push(first);
    let mut since_best = 0;

    for epoch in 1..=tc.max_epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(tc.batch_size) {
            let batch: Vec<Example<'_>> = chunk
                .iter()
                .map(|&i| Example {
                    input: &train_set.inputs[i],
                    target: train_set.targets[i],
                    weight: weights[i],
                })
                .collect();
            let mut grads = net.backward(&batch).map_err(|e| Error::Training(format!("epoch {epoch}: {e}")))?;
            if let Some(max_norm) = tc.clip_norm {
                let norm = grads.norm();
                if norm > max_norm {
                    let scale = max_norm / norm;
                    grads.values.iter_mut().for_each(|g| *g *= scale);
                }
            }
            adam.step(&mut params, &grads.values)
                .map_err(|e| Error::Training(format!("epoch {epoch}: {e}")))?;
            net.set_flat_params(&params)?;
        }

        let record = evaluate(&net, epoch)?;
        let score = record.val_nll.unwrap_or(record.train_nll);
        if !score.is_finite() {
            return Err(Error::Training(format!("non-finite loss at epoch {epoch}")));
        }
        log.epochs.push(record);
        if score < best_score {
            best_score = score;
            best_params.clone_from(&params);
            log.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= tc.patience {
                break;
            }
        }
    }

    net.set_flat_params(&best_params)?;
    Ok((net, log))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_data(n: usize) -> (Vec<Input>, Vec<f64>) {
        let inputs = (0..n)
            .map(|i| Input::Vector(vec![(i as f64 / n as f64) - 0.5, ((i * 7) % 5) as f64 / 5.0]))
            .collect();
        (inputs, vec![10.0; n])
    }

    #[test]
    fn rejects_bad_weights_and_empty_data() {
        let (x, y) = constant_data(8);
        let set = LabeledSet::new(&x, &y).unwrap();
        let cfg = NetworkConfig::feedforward(vec![2, 4], 0);
        let tc = TrainConfig::default();
        assert!(train(&cfg, set, set, &[0.0; 8], &tc).is_err());
        assert!(train(&cfg, set, set, &[1.0; 7], &tc).is_err());
        let empty = LabeledSet::new(&[], &[]).unwrap();
        assert!(train(&cfg, empty, set, &[], &tc).is_err());
        let bad = TrainConfig {
            patience: 600,
            ..TrainConfig::default()
        };
        assert!(train(&cfg, set, set, &[1.0; 8], &bad).is_err());
    }

    #[test]
    fn normalize_to_mean_one() {
        let w = normalize_weights(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(w, vec![0.5, 1.0, 1.5]);
        assert!(normalize_weights(&[0.0, 0.0]).is_err());
        assert!(normalize_weights(&[1.0, -1.0]).is_err());
    }

    #[test]
    fn constant_target_fit() {
        let (x, y) = constant_data(64);
        let (vx, vy) = constant_data(16);
        let set = LabeledSet::new(&x, &y).unwrap();
        let val = LabeledSet::new(&vx, &vy).unwrap();
        let cfg = NetworkConfig::feedforward(vec![2, 8], 3);
        let tc = TrainConfig {
            learning_rate: 0.01,
            max_epochs: 400,
            patience: 50,
            ..TrainConfig::default()
        };
        let (net, log) = train(&cfg, set, val, &[1.0; 64], &tc).unwrap();
        let mu = net.predict(&vx[3]).unwrap().mu;
        assert!((mu - 10.0).abs() < 0.5, "mu = {mu}");
        let v0 = log.epochs[0].val_nll.unwrap();
        assert!(log.monitored(log.best_epoch).unwrap() < v0);
    }
}
