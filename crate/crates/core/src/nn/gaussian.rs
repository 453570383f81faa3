//! Gaussian output head and the weighted negative log-likelihood.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Added to the softplus output so the predicted variance never reaches zero.
pub const VARIANCE_FLOOR: f64 = 1e-6;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Predicted mean and standard deviation for one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPrediction {
    pub mu: f64,
    pub sigma: f64,
}

impl GaussianPrediction {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::Domain(format!("sigma must be positive and finite, got {sigma}")));
        }
        if !mu.is_finite() {
            return Err(Error::Domain(format!("mu must be finite, got {mu}")));
        }
        Ok(Self { mu, sigma })
    }

    /// Maps the two raw head outputs to a prediction: `mu = raw_mu`,
    /// `sigma^2 = softplus(raw_sigma) + VARIANCE_FLOOR`.
    pub fn from_raw(raw_mu: f64, raw_sigma: f64) -> Self {
        let variance = softplus(raw_sigma) + VARIANCE_FLOOR;
        Self {
            mu: raw_mu,
            sigma: variance.sqrt(),
        }
    }

    pub fn variance(&self) -> f64 {
        self.sigma * self.sigma
    }
}

/// `ln(1 + e^x)` without overflow for large `x`.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `weight * (0.5 ln sigma^2 + (y - mu)^2 / (2 sigma^2) + 0.5 ln 2pi)`.
pub fn weighted_nll(pred: &GaussianPrediction, target: f64, weight: f64) -> Result<f64> {
    if !(pred.sigma > 0.0) {
        return Err(Error::Domain(format!("sigma must be positive, got {}", pred.sigma)));
    }
    if !(weight >= 0.0) {
        return Err(Error::Domain(format!("weight must be non-negative, got {weight}")));
    }
    if weight == 0.0 {
        return Ok(0.0);
    }
    Ok(weight * nll_from_variance(pred.mu, pred.variance(), target))
}

#[inline]
pub(crate) fn nll_from_variance(mu: f64, variance: f64, target: f64) -> f64 {
    let r = target - mu;
    0.5 * variance.ln() + r * r / (2.0 * variance) + HALF_LN_2PI
}

/// Loss and its gradient with respect to the two raw head outputs.
#[inline]
pub(crate) fn nll_raw_gradient(raw_mu: f64, raw_sigma: f64, target: f64, weight: f64) -> (f64, [f64; 2]) {
    let variance = softplus(raw_sigma) + VARIANCE_FLOOR;
    let r = target - raw_mu;
    let loss = weight * nll_from_variance(raw_mu, variance, target);
    let d_mu = weight * (raw_mu - target) / variance;
    let d_var = weight * (0.5 / variance - r * r / (2.0 * variance * variance));
    (loss, [d_mu, d_var * sigmoid(raw_sigma)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn half_ln_two_pi_constant() {
        assert_relative_eq!(HALF_LN_2PI, 0.5 * (2.0 * PI).ln(), epsilon = 1e-16);
    }

    #[test]
    fn zero_raw_outputs_give_softplus_sigma() {
        let p = GaussianPrediction::from_raw(0.0, 0.0);
        assert_eq!(p.mu, 0.0);
        assert_relative_eq!(p.sigma, (2f64.ln() + 1e-6).sqrt(), epsilon = 1e-15);
        assert!((p.sigma - 0.83256).abs() < 1e-5);
    }

    #[test]
    fn nll_worked_values() {
        let p = GaussianPrediction::new(0.0, 1.0).unwrap();
        assert!((weighted_nll(&p, 0.0, 1.0).unwrap() - 0.918939).abs() < 1e-6);
        assert!((weighted_nll(&p, 2.0, 1.0).unwrap() - 2.918939).abs() < 1e-6);
        assert_eq!(weighted_nll(&p, 123.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn nll_rejects_bad_sigma() {
        let p = GaussianPrediction { mu: 0.0, sigma: 0.0 };
        assert!(matches!(weighted_nll(&p, 0.0, 1.0), Err(Error::Domain(_))));
        let p = GaussianPrediction { mu: 0.0, sigma: -1.0 };
        assert!(weighted_nll(&p, 0.0, 1.0).is_err());
        assert!(GaussianPrediction::new(0.0, 0.0).is_err());
    }

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(1000.0), 1000.0);
        assert!(softplus(-1000.0) >= 0.0);
        assert!(GaussianPrediction::from_raw(0.0, -1000.0).sigma > 0.0);
        assert!(GaussianPrediction::from_raw(0.0, 700.0).sigma.is_finite());
    }

    #[test]
    fn raw_gradient_matches_finite_difference() {
        let (raw_mu, raw_s, y, w) = (0.3, -0.7, 1.9, 1.7);
        let (_, g) = nll_raw_gradient(raw_mu, raw_s, y, w);
        let f = |m: f64, s: f64| nll_raw_gradient(m, s, y, w).0;
        let h = 1e-6;
        let dm = (f(raw_mu + h, raw_s) - f(raw_mu - h, raw_s)) / (2.0 * h);
        let ds = (f(raw_mu, raw_s + h) - f(raw_mu, raw_s - h)) / (2.0 * h);
        assert_relative_eq!(g[0], dm, max_relative = 1e-7);
        assert_relative_eq!(g[1], ds, max_relative = 1e-7);
    }
}
