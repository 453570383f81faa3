//! Feedforward and recurrent regressors with a two-output Gaussian head.
//!
//! Parameters are laid out in declaration order: recurrent cell (input
//! weights, recurrent weights, biases) when present, then each hidden dense
//! layer (weights, biases), then the head (weights, biases). The flat views
//! returned by [`Network::flat_params`] and consumed by
//! [`Network::set_flat_params`], and the gradients returned by
//! [`Network::backward`], all use this order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gaussian::{nll_raw_gradient, GaussianPrediction};
use super::layers::{Activation, DenseLayer, RecurrentCell};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetworkKind {
    Feedforward,
    Recurrent,
}

/// Architecture description.
///
/// * `Feedforward`: `layer_sizes = [input, hidden_1, ..., hidden_k]`; every
///   hidden layer is a ReLU dense layer, followed by the Gaussian head.
/// * `Recurrent`: `layer_sizes = [step_dim, cell_hidden, dense_1, ...]`; the
///   final hidden state of the cell feeds optional ReLU dense layers and then
///   the head. `seq_len`, when set, pins the accepted sequence length.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub kind: NetworkKind,
    pub layer_sizes: Vec<usize>,
    pub seq_len: Option<usize>,
    pub seed: u64,
}

impl NetworkConfig {
    pub fn feedforward(layer_sizes: Vec<usize>, seed: u64) -> Self {
        Self {
            kind: NetworkKind::Feedforward,
            layer_sizes,
            seq_len: None,
            seed,
        }
    }

    pub fn recurrent(layer_sizes: Vec<usize>, seq_len: Option<usize>, seed: u64) -> Self {
        Self {
            kind: NetworkKind::Recurrent,
            layer_sizes,
            seq_len,
            seed,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes.first().copied().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.iter().any(|&s| s == 0) {
            return Err(Error::Config(format!("layer sizes must be positive: {:?}", self.layer_sizes)));
        }
        match self.kind {
            NetworkKind::Feedforward => {
                if self.layer_sizes.is_empty() {
                    return Err(Error::Config("feedforward network needs an input size".into()));
                }
                if self.seq_len.is_some() {
                    return Err(Error::Config("feedforward network cannot take a sequence length".into()));
                }
            }
            NetworkKind::Recurrent => {
                if self.layer_sizes.len() < 2 {
                    return Err(Error::Config(
                        "recurrent network needs [step_dim, hidden, ...] layer sizes".into(),
                    ));
                }
                if self.seq_len == Some(0) {
                    return Err(Error::Config("sequence length must be positive".into()));
                }
            }
        }
        Ok(())
    }
}

/// One network input: a feature vector or a sequence of per-step vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Input {
    Vector(Vec<f64>),
    Sequence(Vec<Vec<f64>>),
}

impl Input {
    fn describe(&self) -> String {
        match self {
            Input::Vector(v) => format!("vector of length {}", v.len()),
            Input::Sequence(s) => format!(
                "sequence of {} steps of width {}",
                s.len(),
                s.first().map_or(0, Vec::len)
            ),
        }
    }
}

/// One weighted training example.
#[derive(Debug, Clone, Copy)]
pub struct Example<'a> {
    pub input: &'a Input,
    pub target: f64,
    pub weight: f64,
}

/// Gradient of the mean weighted NLL over a batch, flat in declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub values: Vec<f64>,
    pub loss: f64,
}

impl Gradients {
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

struct Trace {
    states: Vec<Vec<f64>>,
    layer_inputs: Vec<Vec<f64>>,
    pre_activations: Vec<Vec<f64>>,
    head_input: Vec<f64>,
    raw: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    config: NetworkConfig,
    cell: Option<RecurrentCell>,
    hidden: Vec<DenseLayer>,
    head: DenseLayer,
}

impl Network {
    /// Builds a network with seeded Glorot-uniform weights and zero biases.
    pub fn new(config: NetworkConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let sizes = &config.layer_sizes;
        let (cell, dense_sizes) = match config.kind {
            NetworkKind::Feedforward => (None, &sizes[..]),
            NetworkKind::Recurrent => (Some(RecurrentCell::glorot(sizes[0], sizes[1], &mut rng)), &sizes[1..]),
        };
        let hidden = dense_sizes
            .windows(2)
            .map(|w| DenseLayer::glorot(w[0], w[1], Activation::Relu, &mut rng))
            .collect();
        let last = *dense_sizes.last().expect("validated non-empty");
        let head = DenseLayer::glorot(last, 2, Activation::Identity, &mut rng);
        Ok(Self {
            config,
            cell,
            hidden,
            head,
        })
    }

    /// Same architecture with every parameter set to zero.
    pub fn zeros(config: NetworkConfig) -> Result<Self> {
        let mut net = Self::new(config)?;
        net.params_mut().for_each(|p| *p = 0.0);
        Ok(net)
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn cell(&self) -> Option<&RecurrentCell> {
        self.cell.as_ref()
    }

    pub fn hidden_layers(&self) -> &[DenseLayer] {
        &self.hidden
    }

    pub fn head(&self) -> &DenseLayer {
        &self.head
    }

    pub fn head_mut(&mut self) -> &mut DenseLayer {
        &mut self.head
    }

    pub fn param_count(&self) -> usize {
        self.cell.as_ref().map_or(0, RecurrentCell::param_count)
            + self.hidden.iter().map(DenseLayer::param_count).sum::<usize>()
            + self.head.param_count()
    }

    fn params(&self) -> impl Iterator<Item = &f64> {
        self.cell
            .iter()
            .flat_map(|c| c.params())
            .chain(self.hidden.iter().flat_map(|l| l.params()))
            .chain(self.head.params())
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.cell
            .iter_mut()
            .flat_map(|c| c.params_mut())
            .chain(self.hidden.iter_mut().flat_map(|l| l.params_mut()))
            .chain(self.head.params_mut())
    }

    pub fn flat_params(&self) -> Vec<f64> {
        self.params().copied().collect()
    }

    pub fn set_flat_params(&mut self, values: &[f64]) -> Result<()> {
        let n = self.param_count();
        if values.len() != n {
            return Err(Error::mismatch(format!("{n} parameters"), format!("{} parameters", values.len())));
        }
        self.params_mut().zip(values).for_each(|(p, v)| *p = *v);
        Ok(())
    }

    fn check_input(&self, input: &Input) -> Result<()> {
        let dim = self.config.input_dim();
        let ok = match (self.config.kind, input) {
            (NetworkKind::Feedforward, Input::Vector(v)) => v.len() == dim,
            (NetworkKind::Recurrent, Input::Sequence(s)) => {
                !s.is_empty()
                    && self.config.seq_len.is_none_or(|len| s.len() == len)
                    && s.iter().all(|step| step.len() == dim)
            }
            _ => false,
        };
        if ok {
            return Ok(());
        }
        let expected = match self.config.kind {
            NetworkKind::Feedforward => format!("vector of length {dim}"),
            NetworkKind::Recurrent => match self.config.seq_len {
                Some(len) => format!("sequence of {len} steps of width {dim}"),
                None => format!("non-empty sequence of steps of width {dim}"),
            },
        };
        Err(Error::mismatch(expected, input.describe()))
    }

    fn forward(&self, input: &Input) -> Result<Trace> {
        self.check_input(input)?;
        let (states, mut activation) = match (input, &self.cell) {
            (Input::Sequence(steps), Some(cell)) => {
                let states = cell.forward(steps);
                let last = states.last().expect("h_0 present").clone();
                (states, last)
            }
            (Input::Vector(v), None) => (Vec::new(), v.clone()),
            _ => unreachable!("input kind checked"),
        };
        let mut layer_inputs = Vec::with_capacity(self.hidden.len());
        let mut pre_activations = Vec::with_capacity(self.hidden.len());
        for layer in &self.hidden {
            let (pre, out) = layer.forward(&activation);
            layer_inputs.push(std::mem::replace(&mut activation, out));
            pre_activations.push(pre);
        }
        let (raw, _) = self.head.forward(&activation);
        Ok(Trace {
            states,
            layer_inputs,
            pre_activations,
            head_input: activation,
            raw: [raw[0], raw[1]],
        })
    }

    /// Predictive Gaussian for one input. Deterministic for fixed parameters.
    pub fn predict(&self, input: &Input) -> Result<GaussianPrediction> {
        let trace = self.forward(input)?;
        let pred = GaussianPrediction::from_raw(trace.raw[0], trace.raw[1]);
        if !pred.mu.is_finite() || !pred.sigma.is_finite() {
            return Err(Error::Domain(format!(
                "non-finite prediction (mu={}, sigma={})",
                pred.mu, pred.sigma
            )));
        }
        Ok(pred)
    }

    pub fn predict_many<'a, I>(&self, inputs: I) -> Result<Vec<GaussianPrediction>>
    where
        I: IntoIterator<Item = &'a Input>,
    {
        inputs.into_iter().map(|x| self.predict(x)).collect()
    }

    /// Mean weighted NLL over the batch.
    pub fn batch_loss(&self, batch: &[Example<'_>]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::Data("empty batch".into()));
        }
        let mut total = 0.0;
        for ex in batch {
            let trace = self.forward(ex.input)?;
            total += nll_raw_gradient(trace.raw[0], trace.raw[1], ex.target, ex.weight).0;
        }
        Ok(total / batch.len() as f64)
    }

    /// Analytic gradient of the mean weighted NLL over `batch`.
    pub fn backward(&self, batch: &[Example<'_>]) -> Result<Gradients> {
        if batch.is_empty() {
            return Err(Error::Data("empty batch".into()));
        }
        let mut grad = vec![0.0; self.param_count()];
        let mut loss = 0.0;
        for ex in batch {
            if !(ex.weight >= 0.0) {
                return Err(Error::Domain(format!("weight must be non-negative, got {}", ex.weight)));
            }
            loss += self.accumulate(ex, &mut grad)?;
        }
        let scale = 1.0 / batch.len() as f64;
        grad.iter_mut().for_each(|g| *g *= scale);
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Domain("non-finite gradient".into()));
        }
        Ok(Gradients {
            values: grad,
            loss: loss * scale,
        })
    }

    fn accumulate(&self, ex: &Example<'_>, grad: &mut [f64]) -> Result<f64> {
        let trace = self.forward(ex.input)?;
        let (loss, d_raw) = nll_raw_gradient(trace.raw[0], trace.raw[1], ex.target, ex.weight);
        if ex.weight == 0.0 {
            return Ok(loss);
        }

        let cell_len = self.cell.as_ref().map_or(0, RecurrentCell::param_count);
        let (cell_grad, rest) = grad.split_at_mut(cell_len);
        let head_offset = rest.len() - self.head.param_count();
        let (hidden_grad, head_grad) = rest.split_at_mut(head_offset);

        let mut upstream = self.head.backward(&trace.head_input, &trace.raw, &d_raw, head_grad);

        let mut offsets = Vec::with_capacity(self.hidden.len());
        let mut acc = 0;
        for layer in &self.hidden {
            offsets.push(acc);
            acc += layer.param_count();
        }
        for (i, layer) in self.hidden.iter().enumerate().rev() {
            let slot = &mut hidden_grad[offsets[i]..offsets[i] + layer.param_count()];
            upstream = layer.backward(&trace.layer_inputs[i], &trace.pre_activations[i], &upstream, slot);
        }

        if let (Some(cell), Input::Sequence(steps)) = (&self.cell, ex.input) {
            cell.backward(steps, &trace.states, &upstream, cell_grad);
        }
        Ok(loss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gaussian::weighted_nll;

    fn small_ff(seed: u64) -> Network {
        Network::new(NetworkConfig::feedforward(vec![3, 5, 4], seed)).unwrap()
    }

    #[test]
    fn zero_network_predicts_softplus_sigma() {
        let net = Network::zeros(NetworkConfig::feedforward(vec![4, 6], 0)).unwrap();
        let p = net.predict(&Input::Vector(vec![1.0, -2.0, 3.0, 9.0])).unwrap();
        assert_eq!(p.mu, 0.0);
        assert!((p.sigma - 0.83256).abs() < 1e-5);

        let rnn = Network::zeros(NetworkConfig::recurrent(vec![3, 4], Some(5), 0)).unwrap();
        let p = rnn.predict(&Input::Sequence(vec![vec![1.0, 0.0, 0.0]; 5])).unwrap();
        assert_eq!(p.mu, 0.0);
        assert!((p.sigma - 0.83256).abs() < 1e-5);
    }

    #[test]
    fn identity_head_passes_input_through() {
        let mut net = Network::zeros(NetworkConfig::feedforward(vec![1], 0)).unwrap();
        net.head_mut().weights = vec![1.0, 0.0];
        let p = net.predict(&Input::Vector(vec![5.0])).unwrap();
        assert_eq!(p.mu, 5.0);
    }

    #[test]
    fn prediction_is_deterministic() {
        let a = Network::new(NetworkConfig::feedforward(vec![3, 8, 4], 42)).unwrap();
        let b = Network::new(NetworkConfig::feedforward(vec![3, 8, 4], 42)).unwrap();
        let x = Input::Vector(vec![0.1, 0.2, 0.3]);
        let p1 = a.predict(&x).unwrap();
        let p2 = a.predict(&x).unwrap();
        let p3 = b.predict(&x).unwrap();
        assert_eq!(p1.mu.to_bits(), p2.mu.to_bits());
        assert_eq!(p1.sigma.to_bits(), p3.sigma.to_bits());
    }

    #[test]
    fn dimension_mismatch_names_shapes() {
        let net = small_ff(1);
        let err = net.predict(&Input::Vector(vec![1.0; 4])).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("vector of length 3"), "{msg}");
        assert!(msg.contains("vector of length 4"), "{msg}");

        let rnn = Network::new(NetworkConfig::recurrent(vec![3, 4], Some(32), 1)).unwrap();
        let err = rnn.predict(&Input::Sequence(vec![vec![0.0; 3]; 31])).unwrap_err();
        assert!(err.to_string().contains("32 steps"));
        assert!(rnn.predict(&Input::Vector(vec![0.0; 3])).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(Network::new(NetworkConfig::feedforward(vec![], 0)).is_err());
        assert!(Network::new(NetworkConfig::feedforward(vec![3, 0], 0)).is_err());
        assert!(Network::new(NetworkConfig::recurrent(vec![3], None, 0)).is_err());
    }

    #[test]
    fn flat_params_round_trip() {
        let mut net = Network::new(NetworkConfig::recurrent(vec![3, 4, 5], None, 9)).unwrap();
        let p = net.flat_params();
        assert_eq!(p.len(), net.param_count());
        assert_eq!(p.len(), (12 + 16 + 4) + (20 + 5) + (10 + 2));
        let shifted: Vec<f64> = p.iter().map(|v| v + 1.0).collect();
        net.set_flat_params(&shifted).unwrap();
        assert_eq!(net.flat_params(), shifted);
        assert!(net.set_flat_params(&p[1..]).is_err());
    }

    #[test]
    fn residual_zero_gives_zero_mu_gradient() {
        let net = small_ff(5);
        let x = Input::Vector(vec![0.3, -0.1, 0.8]);
        let mu = net.predict(&x).unwrap().mu;
        let g = net
            .backward(&[Example {
                input: &x,
                target: mu,
                weight: 1.0,
            }])
            .unwrap();
        let head = net.head();
        let n = g.values.len();
        let head_grad = &g.values[n - head.param_count()..];
        // mu row of the head weights, then the mu bias.
        let in_dim = head.in_dim();
        assert!(head_grad[..in_dim].iter().all(|v| v.abs() < 1e-12));
        assert!(head_grad[2 * in_dim].abs() < 1e-12);
    }

    #[test]
    fn weights_two_and_zero_equal_single_weight_one() {
        let net = small_ff(7);
        let x = Input::Vector(vec![0.5, 0.2, -0.4]);
        let pair = net
            .backward(&[
                Example { input: &x, target: 2.0, weight: 2.0 },
                Example { input: &x, target: 2.0, weight: 0.0 },
            ])
            .unwrap();
        let single = net.backward(&[Example { input: &x, target: 2.0, weight: 1.0 }]).unwrap();
        for (a, b) in pair.values.iter().zip(&single.values) {
            assert!((a - b).abs() <= 1e-14 * b.abs().max(1.0));
        }
    }

    #[test]
    fn batch_loss_matches_weighted_nll() {
        let net = small_ff(11);
        let x = Input::Vector(vec![0.1, 0.9, -0.3]);
        let pred = net.predict(&x).unwrap();
        let expected = weighted_nll(&pred, 1.5, 0.7).unwrap();
        let got = net.batch_loss(&[Example { input: &x, target: 1.5, weight: 0.7 }]).unwrap();
        assert!((expected - got).abs() < 1e-12);
    }
}
