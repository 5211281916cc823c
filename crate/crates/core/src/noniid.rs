//! Heterogeneity as per-client noise rates.
//!
//! Each client draws a class-weight vector from a symmetric Dirichlet with the
//! given concentration. Its skew is the total-variation distance from the
//! uniform vector, and its binary noise rate is
//! `base_noise * (1 + skew_gain * skew)`, clipped to `[0, MAX_ALPHA]`.
//! Low concentrations give skewed weights and hence larger, more dispersed
//! noise rates. The mapping is a modeling choice; it is not calibrated to any
//! particular dataset.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper clip for noise rates; clients stay right more often than wrong.
pub const MAX_ALPHA: f64 = 0.499;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseProfileParams {
    /// Dimension of the class-weight vector.
    pub classes: usize,
    pub base_noise: f64,
    pub skew_gain: f64,
}

impl Default for NoiseProfileParams {
    fn default() -> Self {
        Self {
            classes: 10,
            base_noise: 0.1,
            skew_gain: 1.0,
        }
    }
}

/// Symmetric Dirichlet draw via normalized Gamma variates, computed in log
/// space so that tiny concentrations don't underflow to an all-zero vector.
pub fn dirichlet<R: Rng + ?Sized>(concentration: f64, dim: usize, rng: &mut R) -> Vec<f64> {
    // Gamma(a) = Gamma(a + 1) * U^(1/a)
    let gamma = Gamma::new(concentration + 1.0, 1.0).expect("positive shape");
    let logs: Vec<f64> = (0..dim)
        .map(|_| {
            let g: f64 = gamma.sample(rng);
            let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
            g.ln() + u.ln() / concentration
        })
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|&x| (x - max).exp()).collect();
    let sum: f64 = w.iter().sum();
    w.into_iter().map(|x| x / sum).collect()
}

pub fn total_variation_from_uniform(w: &[f64]) -> f64 {
    let u = 1.0 / w.len() as f64;
    0.5 * w.iter().map(|x| (x - u).abs()).sum::<f64>()
}

pub fn noniid_noise_profile<R: Rng + ?Sized>(
    concentration: f64,
    clients: usize,
    params: &NoiseProfileParams,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(concentration.is_finite() && concentration > 0.0) {
        return Err(Error::InvalidConcentration(concentration));
    }
    if params.classes < 2 {
        return Err(Error::TooFewLabels(params.classes));
    }
    if !(params.base_noise.is_finite() && params.base_noise >= 0.0)
        || !(params.skew_gain.is_finite() && params.skew_gain >= 0.0)
    {
        return Err(Error::Config(format!(
            "base_noise and skew_gain must be finite and non-negative, got {} and {}",
            params.base_noise, params.skew_gain
        )));
    }
    Ok((0..clients)
        .map(|_| {
            let w = dirichlet(concentration, params.classes, rng);
            let skew = total_variation_from_uniform(&w);
            (params.base_noise * (1.0 + params.skew_gain * skew)).clamp(0.0, MAX_ALPHA)
        })
        .collect())
}
