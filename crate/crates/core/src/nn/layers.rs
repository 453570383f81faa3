use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    #[inline]
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// Uniform Glorot initialisation: `U[-l, l]` with `l = sqrt(6 / (fan_in + fan_out))`.
pub(crate) fn glorot<R: Rng + ?Sized>(len: usize, fan_in: usize, fan_out: usize, rng: &mut R) -> Vec<f64> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let dist = Uniform::new_inclusive(-limit, limit).expect("finite glorot limit");
    (0..len).map(|_| dist.sample(rng)).collect()
}

/// Affine map followed by an element-wise activation.
///
/// `weights` is row-major with shape `(out_dim, in_dim)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub(crate) in_dim: usize,
    pub(crate) out_dim: usize,
    pub(crate) weights: Vec<f64>,
    pub(crate) biases: Vec<f64>,
    pub(crate) activation: Activation,
}

impl DenseLayer {
    pub fn zeros(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            biases: vec![0.0; out_dim],
            activation,
        }
    }

    pub fn glorot<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, activation: Activation, rng: &mut R) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: glorot(in_dim * out_dim, in_dim, out_dim, rng),
            biases: vec![0.0; out_dim],
            activation,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    /// Returns `(pre_activation, output)`.
    pub(crate) fn forward(&self, input: &[f64]) -> (Vec<f64>, Vec<f64>) {
        debug_assert_eq!(input.len(), self.in_dim);
        let mut pre = self.biases.clone();
        for (o, z) in pre.iter_mut().enumerate() {
            let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
            *z += row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
        }
        let out = pre.iter().map(|&z| self.activation.apply(z)).collect();
        (pre, out)
    }

    /// Accumulates parameter gradients into `grad` (weights then biases) and
    /// returns the gradient with respect to `input`.
    pub(crate) fn backward(&self, input: &[f64], pre: &[f64], grad_out: &[f64], grad: &mut [f64]) -> Vec<f64> {
        let (gw, gb) = grad.split_at_mut(self.weights.len());
        let mut grad_in = vec![0.0; self.in_dim];
        for o in 0..self.out_dim {
            let dz = grad_out[o] * self.activation.derivative(pre[o]);
            if dz == 0.0 {
                continue;
            }
            gb[o] += dz;
            let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
            let grow = &mut gw[o * self.in_dim..(o + 1) * self.in_dim];
            for i in 0..self.in_dim {
                grow[i] += dz * input[i];
                grad_in[i] += dz * row[i];
            }
        }
        grad_in
    }

    pub(crate) fn params(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().chain(self.biases.iter())
    }

    pub(crate) fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights.iter_mut().chain(self.biases.iter_mut())
    }
}

/// Single-layer Elman cell: `h_t = tanh(W_in x_t + W_rec h_{t-1} + b)`, `h_0 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrentCell {
    pub(crate) in_dim: usize,
    pub(crate) hidden: usize,
    /// `(hidden, in_dim)`, row-major.
    pub(crate) input_weights: Vec<f64>,
    /// `(hidden, hidden)`, row-major.
    pub(crate) recurrent_weights: Vec<f64>,
    pub(crate) biases: Vec<f64>,
}

impl RecurrentCell {
    pub fn zeros(in_dim: usize, hidden: usize) -> Self {
        Self {
            in_dim,
            hidden,
            input_weights: vec![0.0; hidden * in_dim],
            recurrent_weights: vec![0.0; hidden * hidden],
            biases: vec![0.0; hidden],
        }
    }

    pub fn glorot<R: Rng + ?Sized>(in_dim: usize, hidden: usize, rng: &mut R) -> Self {
        Self {
            in_dim,
            hidden,
            input_weights: glorot(hidden * in_dim, in_dim, hidden, rng),
            recurrent_weights: glorot(hidden * hidden, hidden, hidden, rng),
            biases: vec![0.0; hidden],
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn param_count(&self) -> usize {
        self.input_weights.len() + self.recurrent_weights.len() + self.biases.len()
    }

    /// Runs the whole sequence and returns every hidden state, `h_0` included.
    pub(crate) fn forward(&self, steps: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let mut states = Vec::with_capacity(steps.len() + 1);
        states.push(vec![0.0; self.hidden]);
        for x in steps {
            let prev = states.last().expect("h_0 pushed");
            let mut h = self.biases.clone();
            for (j, hj) in h.iter_mut().enumerate() {
                let wi = &self.input_weights[j * self.in_dim..(j + 1) * self.in_dim];
                let wr = &self.recurrent_weights[j * self.hidden..(j + 1) * self.hidden];
                let z = *hj
                    + wi.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
                    + wr.iter().zip(prev).map(|(w, v)| w * v).sum::<f64>();
                *hj = z.tanh();
            }
            states.push(h);
        }
        states
    }

    /// Backpropagation through time from a gradient on the final hidden state.
    pub(crate) fn backward(&self, steps: &[Vec<f64>], states: &[Vec<f64>], grad_last: &[f64], grad: &mut [f64]) {
        let n_in = self.input_weights.len();
        let n_rec = self.recurrent_weights.len();
        let (g_in, rest) = grad.split_at_mut(n_in);
        let (g_rec, g_b) = rest.split_at_mut(n_rec);
        let mut dh = grad_last.to_vec();
        let mut dz = vec![0.0; self.hidden];
        for t in (0..steps.len()).rev() {
            let h = &states[t + 1];
            let h_prev = &states[t];
            let x = &steps[t];
            for j in 0..self.hidden {
                dz[j] = dh[j] * (1.0 - h[j] * h[j]);
            }
            let mut dh_prev = vec![0.0; self.hidden];
            for j in 0..self.hidden {
                let d = dz[j];
                if d == 0.0 {
                    continue;
                }
                g_b[j] += d;
                let gi = &mut g_in[j * self.in_dim..(j + 1) * self.in_dim];
                for (g, v) in gi.iter_mut().zip(x) {
                    *g += d * v;
                }
                let wr = &self.recurrent_weights[j * self.hidden..(j + 1) * self.hidden];
                let gr = &mut g_rec[j * self.hidden..(j + 1) * self.hidden];
                for k in 0..self.hidden {
                    gr[k] += d * h_prev[k];
                    dh_prev[k] += d * wr[k];
                }
            }
            dh = dh_prev;
        }
    }

    pub(crate) fn params(&self) -> impl Iterator<Item = &f64> {
        self.input_weights
            .iter()
            .chain(self.recurrent_weights.iter())
            .chain(self.biases.iter())
    }

    pub(crate) fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.input_weights
            .iter_mut()
            .chain(self.recurrent_weights.iter_mut())
            .chain(self.biases.iter_mut())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn glorot_respects_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let layer = DenseLayer::glorot(11, 24, Activation::Relu, &mut rng);
        let limit = (6.0f64 / 35.0).sqrt();
        assert!(layer.weights.iter().all(|w| w.abs() <= limit));
        assert!(layer.biases.iter().all(|&b| b == 0.0));
        assert_eq!(layer.param_count(), 11 * 24 + 24);
    }

    #[test]
    fn dense_forward_relu() {
        let mut layer = DenseLayer::zeros(2, 2, Activation::Relu);
        layer.weights = vec![1.0, 2.0, -1.0, -1.0];
        layer.biases = vec![0.5, 0.0];
        let (pre, out) = layer.forward(&[1.0, 1.0]);
        assert_eq!(pre, vec![3.5, -2.0]);
        assert_eq!(out, vec![3.5, 0.0]);
    }

    #[test]
    fn recurrent_zero_state_and_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cell = RecurrentCell::glorot(3, 4, &mut rng);
        let steps = vec![vec![1.0, 0.0, 0.0]; 5];
        let states = cell.forward(&steps);
        assert_eq!(states.len(), 6);
        assert!(states[0].iter().all(|&h| h == 0.0));
        assert!(states.iter().all(|h| h.len() == 4));
    }
}
