//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uaboost::features::PcaModel;
use uaboost::nn::{Example, Input, Network, NetworkConfig};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

/// A random small network with random parameters and a random batch.
pub struct GradientCase {
    pub net: Network,
    pub inputs: Vec<Input>,
    pub targets: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GradientCase {
    pub fn examples(&self) -> Vec<Example<'_>> {
        self.inputs
            .iter()
            .zip(&self.targets)
            .zip(&self.weights)
            .map(|((input, &target), &weight)| Example { input, target, weight })
            .collect()
    }
}

pub fn random_gradient_case(seed: u64, recurrent: bool) -> GradientCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = if recurrent {
        let step = rng.random_range(1..=3);
        let hidden = rng.random_range(1..=4);
        let mut sizes = vec![step, hidden];
        if rng.random_bool(0.5) {
            sizes.push(rng.random_range(1..=4));
        }
        NetworkConfig::recurrent(sizes, None, seed)
    } else {
        let mut sizes = vec![rng.random_range(1..=4)];
        for _ in 0..rng.random_range(0..=2) {
            sizes.push(rng.random_range(1..=5));
        }
        NetworkConfig::feedforward(sizes, seed)
    };
    let mut net = Network::new(config.clone()).expect("valid config");
    assert!(net.param_count() <= 200, "case too large: {}", net.param_count());
    let params: Vec<f64> = (0..net.param_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
    net.set_flat_params(&params).unwrap();

    let batch = rng.random_range(1..=4);
    let seq_len = rng.random_range(1..=5);
    let dim = config.input_dim();
    let inputs = (0..batch)
        .map(|_| {
            if recurrent {
                Input::Sequence(
                    (0..seq_len)
                        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
                        .collect(),
                )
            } else {
                Input::Vector((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
            }
        })
        .collect();
    let targets = (0..batch).map(|_| rng.random_range(-3.0..3.0)).collect();
    let weights = (0..batch).map(|_| rng.random_range(0.0..2.0)).collect();
    GradientCase {
        net,
        inputs,
        targets,
        weights,
    }
}

/// Largest violation of `|a - n| <= max(rel * max(|a|, |n|), abs_floor)`
/// between analytic and central-difference gradients, as a ratio (<= 1 passes).
pub fn gradient_violation(case: &GradientCase, h: f64, rel: f64, abs_floor: f64) -> f64 {
    let examples = case.examples();
    let analytic = case.net.backward(&examples).unwrap().values;
    let base = case.net.flat_params();
    let mut probe = case.net.clone();
    let mut worst: f64 = 0.0;
    for i in 0..base.len() {
        let mut p = base.clone();
        p[i] = base[i] + h;
        probe.set_flat_params(&p).unwrap();
        let up = probe.batch_loss(&examples).unwrap();
        p[i] = base[i] - h;
        probe.set_flat_params(&p).unwrap();
        let down = probe.batch_loss(&examples).unwrap();
        let numeric = (up - down) / (2.0 * h);
        let tol = (rel * analytic[i].abs().max(numeric.abs())).max(abs_floor);
        worst = worst.max((analytic[i] - numeric).abs() / tol);
    }
    worst
}

/// Rows `N x D` with correlated columns and well separated spectrum.
pub fn random_pca_rows(seed: u64, n: usize, d: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mix: Vec<Vec<f64>> = (0..d)
        .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let scales: Vec<f64> = (0..d).map(|j| 0.93f64.powi(j as i32) * 3.0).collect();
    (0..n)
        .map(|_| {
            let latent: Vec<f64> = (0..d).map(|j| rng.random_range(-1.0..1.0) * scales[j]).collect();
            (0..d)
                .map(|c| (0..d).map(|j| latent[j] * mix[j][c]).sum::<f64>() + 5.0 * c as f64)
                .collect()
        })
        .collect()
}

pub struct PcaComparison {
    pub max_variance_error: f64,
    /// Largest principal angle between fitted and oracle subspaces, radians.
    pub max_angle: f64,
}

/// Standardises with the sample std, eigendecomposes the covariance with
/// nalgebra, and compares against the fitted model.
pub fn compare_with_oracle(rows: &[Vec<f64>], model: &PcaModel) -> PcaComparison {
    let n = rows.len();
    let d = rows[0].len();
    let k = model.n_components();
    let x = DMatrix::from_fn(n, d, |i, j| rows[i][j]);
    let mut z = x.clone();
    for j in 0..d {
        let col = x.column(j);
        let mean = col.mean();
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let std = if var > 0.0 { var.sqrt() } else { 1.0 };
        for i in 0..n {
            z[(i, j)] = (x[(i, j)] - mean) / std;
        }
    }
    let cov = z.transpose() * &z / (n as f64 - 1.0);
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let max_variance_error = (0..k)
        .map(|i| (eig.eigenvalues[order[i]] - model.explained_variance[i]).abs())
        .fold(0.0, f64::max);

    let oracle = DMatrix::from_fn(d, k, |r, c| eig.eigenvectors[(r, order[c])]);
    let fitted = DMatrix::from_fn(d, k, |r, c| model.components[c][r]);
    let residual = &fitted - &oracle * (oracle.transpose() * &fitted);
    let sin_max = residual.singular_values().max().min(1.0);
    PcaComparison {
        max_variance_error,
        max_angle: sin_max.asin(),
    }
}
