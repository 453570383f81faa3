//! Z-score standardisation followed by principal component projection.
//!
//! With at least as many rows as columns the components come from the D x D
//! covariance of the standardised data; otherwise from the N x N Gram matrix,
//! mapped back to feature space and re-orthonormalised. Either way a fitted
//! model only ever sees the rows it was fitted on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, symmetric_eigen, SquareMatrix};

pub const PCA_COMPONENTS: usize = 21;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub feature_means: Vec<f64>,
    /// Sample standard deviations; constant columns store 1.
    pub feature_stds: Vec<f64>,
    /// `n_components` unit rows of length D.
    pub components: Vec<Vec<f64>>,
    /// Variance of the training scores along each component, non-increasing.
    pub explained_variance: Vec<f64>,
}

impl PcaModel {
    pub fn input_dim(&self) -> usize {
        self.feature_means.len()
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn standardize(&self, raw: &[f64]) -> Result<Vec<f64>> {
        if raw.len() != self.input_dim() {
            return Err(Error::mismatch(
                format!("vector of length {}", self.input_dim()),
                format!("vector of length {}", raw.len()),
            ));
        }
        Ok(raw
            .iter()
            .zip(self.feature_means.iter().zip(&self.feature_stds))
            .map(|(x, (m, s))| (x - m) / s)
            .collect())
    }

    pub fn project(&self, raw: &[f64]) -> Result<Vec<f64>> {
        let z = self.standardize(raw)?;
        Ok(self.components.iter().map(|c| dot(c, &z)).collect())
    }
}

/// Fits a model keeping the default 21 components.
pub fn pca_fit(rows: &[Vec<f64>]) -> Result<PcaModel> {
    pca_fit_k(rows, PCA_COMPONENTS)
}

pub fn pca_project(model: &PcaModel, raw: &[f64]) -> Result<Vec<f64>> {
    model.project(raw)
}

pub fn pca_fit_k(rows: &[Vec<f64>], k: usize) -> Result<PcaModel> {
    let n = rows.len();
    let d = rows.first().map_or(0, Vec::len);
    if k == 0 {
        return Err(Error::Config("need at least one component".into()));
    }
    if n < k + 1 {
        return Err(Error::Data(format!("PCA with {k} components needs at least {} rows, got {n}", k + 1)));
    }
    if d < k {
        return Err(Error::Data(format!("PCA with {k} components needs at least {k} columns, got {d}")));
    }
    if let Some(row) = rows.iter().find(|r| r.len() != d) {
        return Err(Error::mismatch(format!("rows of length {d}"), format!("row of length {}", row.len())));
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Data("PCA input contains non-finite values".into()));
    }

    let nf = n as f64;
    let means: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / nf).collect();
    let mut constant = 0;
    let stds: Vec<f64> = (0..d)
        .map(|j| {
            let var = rows.iter().map(|r| (r[j] - means[j]).powi(2)).sum::<f64>() / (nf - 1.0);
            if var > 0.0 {
                var.sqrt()
            } else {
                constant += 1;
                1.0
            }
        })
        .collect();
    if constant == d {
        return Err(Error::Data("every column is constant".into()));
    }
    let z: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| (0..d).map(|j| (r[j] - means[j]) / stds[j]).collect())
        .collect();

    let (mut components, variances) = if n >= d {
        covariance_route(&z, d, k)
    } else {
        gram_route(&z, d, k)
    };

    for c in &mut components {
        let lead = c
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (i, &v)| if v.abs() > best.1.abs() { (i, v) } else { best });
        if lead.1 < 0.0 {
            c.iter_mut().for_each(|v| *v = -*v);
        }
    }

    Ok(PcaModel {
        feature_means: means,
        feature_stds: stds,
        components,
        explained_variance: variances,
    })
}

fn covariance_route(z: &[Vec<f64>], d: usize, k: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let denom = (z.len() - 1) as f64;
    let mut cov = SquareMatrix::zeros(d);
    for i in 0..d {
        for j in i..d {
            let s = z.iter().map(|r| r[i] * r[j]).sum::<f64>() / denom;
            cov.set(i, j, s);
            cov.set(j, i, s);
        }
    }
    let eig = symmetric_eigen(&cov);
    let values = eig.values.iter().take(k).map(|&v| v.max(0.0)).collect();
    (eig.vectors.into_iter().take(k).collect(), values)
}

fn gram_route(z: &[Vec<f64>], d: usize, k: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = z.len();
    let denom = (n - 1) as f64;
    let mut gram = SquareMatrix::zeros(n);
    for a in 0..n {
        for b in a..n {
            let s = dot(&z[a], &z[b]) / denom;
            gram.set(a, b, s);
            gram.set(b, a, s);
        }
    }
    let eig = symmetric_eigen(&gram);
    let top = eig.values.first().copied().unwrap_or(0.0).max(0.0);

    // Map u -> Z^T u for the significant Gram eigenvectors, then complete the
    // basis with coordinate axes; modified Gram-Schmidt cleans up both.
    let mut candidates: Vec<(Vec<f64>, f64)> = Vec::new();
    for (u, &lambda) in eig.vectors.iter().zip(&eig.values) {
        if candidates.len() == k || !(lambda > 1e-10 * top) {
            break;
        }
        let mut c = vec![0.0; d];
        for (row, &w) in z.iter().zip(u) {
            for j in 0..d {
                c[j] += w * row[j];
            }
        }
        candidates.push((c, lambda));
    }
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut values = Vec::with_capacity(k);
    let axes = (0..d).map(|j| {
        let mut e = vec![0.0; d];
        e[j] = 1.0;
        (e, 0.0)
    });
    for (mut c, lambda) in candidates.into_iter().chain(axes) {
        if basis.len() == k {
            break;
        }
        for _ in 0..2 {
            for b in &basis {
                let p = dot(&c, b);
                c.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
            }
        }
        let norm = dot(&c, &c).sqrt();
        if norm < 1e-8 {
            continue;
        }
        c.iter_mut().for_each(|x| *x /= norm);
        basis.push(c);
        values.push(lambda.max(0.0));
    }
    (basis, values)
}
