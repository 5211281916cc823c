//! Turning raw client outputs into categorical reports.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::world::Label;

/// Coordinate-wise sign on the `{0, 1}` alphabet: negative values map to
/// label 0 (`-1`), everything else, zero included, to label 1 (`+1`).
pub fn sign_quantize(update: &[f64]) -> Vec<Label> {
    update.iter().map(|&x| if x < 0.0 { 0 } else { 1 }).collect()
}

/// Per-task MAP label; ties go to the lowest index.
pub fn map_relabel(posteriors: &[Vec<f64>]) -> Result<Vec<Label>> {
    posteriors
        .iter()
        .enumerate()
        .map(|(task, p)| {
            let invalid = |reason: String| Error::InvalidPosterior { task, reason };
            if p.is_empty() {
                return Err(invalid("empty".into()));
            }
            if let Some(x) = p.iter().find(|x| !x.is_finite() || **x < 0.0) {
                return Err(invalid(format!("entry {x}")));
            }
            let sum: f64 = p.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(invalid(format!("sums to {sum}")));
            }
            let mut best = 0;
            for (a, &x) in p.iter().enumerate().skip(1) {
                if x > p[best] {
                    best = a;
                }
            }
            Ok(best as Label)
        })
        .collect()
}

/// `P(Y = a | Z = z)`, proportional to `prior(a) * channel(a, z)`.
pub fn posterior(prior: &[f64], channel: &Matrix, signal: Label) -> Vec<f64> {
    let z = signal as usize;
    let joint: Vec<f64> = prior
        .iter()
        .enumerate()
        .map(|(a, &p)| p * channel.get(a, z))
        .collect();
    let total: f64 = joint.iter().sum();
    if total == 0.0 {
        return vec![1.0 / prior.len() as f64; prior.len()];
    }
    joint.into_iter().map(|x| x / total).collect()
}
