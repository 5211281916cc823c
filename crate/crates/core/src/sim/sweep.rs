use serde::{Deserialize, Serialize};

use super::config::{NoiseSpec, SimConfig};
use super::run::{run_simulation, AttackSummary};
use crate::attack::AttackSpec;
use crate::error::{Error, Result};
use crate::noniid::NoiseProfileParams;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeterogeneityPoint {
    pub concentration: f64,
    pub mean_alpha: f64,
    pub max_alpha: f64,
    /// Share of sampled honest pairs whose estimated delta passes the
    /// categorical check, over all rounds.
    pub categorical_holds_fraction: f64,
    pub honest_pairs: usize,
    pub honest_mean: f64,
    /// Mean reward of sign-flipping clients, if any.
    pub flip_mean: Option<f64>,
    pub gap: Option<f64>,
}

/// Runs `base` once per concentration with Dirichlet-derived noise rates.
/// Profile parameters come from `base` when it already uses Dirichlet noise.
pub fn heterogeneity_sweep(concentrations: &[f64], base: &SimConfig) -> Result<Vec<HeterogeneityPoint>> {
    let params = match &base.noise {
        NoiseSpec::Dirichlet { params, .. } => *params,
        _ => NoiseProfileParams::default(),
    };
    concentrations
        .iter()
        .map(|&concentration| {
            if !(concentration.is_finite() && concentration > 0.0) {
                return Err(Error::InvalidConcentration(concentration));
            }
            let cfg = SimConfig {
                noise: NoiseSpec::Dirichlet { concentration, params },
                ..base.clone()
            };
            let run = run_simulation(&cfg)?;
            let honest: Vec<bool> = run
                .verdicts()
                .iter()
                .filter(|v| v.honest_pair)
                .map(|v| v.empirical.holds)
                .collect();
            let summary = run.attack_summary(1);
            let mean_for = |a: AttackSpec| summary.iter().find(|s| s.attack == a).map(|s| s.mean);
            let honest_mean = mean_for(AttackSpec::Honest).unwrap_or(f64::NAN);
            let flip_mean = mean_for(AttackSpec::SignFlip);
            Ok(HeterogeneityPoint {
                concentration,
                mean_alpha: run.alphas.iter().sum::<f64>() / run.alphas.len() as f64,
                max_alpha: run.alphas.iter().copied().fold(0.0, f64::max),
                categorical_holds_fraction: honest.iter().filter(|&&h| h).count() as f64 / honest.len().max(1) as f64,
                honest_pairs: honest.len(),
                honest_mean,
                flip_mean,
                gap: flip_mean.map(|f| honest_mean - f),
            })
        })
        .collect()
}

/// Mean reward per attack over the rounds where every configured lag
/// reaches a real earlier round (`t > max lag`).
pub fn lagged_reward_profile(config: &SimConfig) -> Result<Vec<AttackSummary>> {
    let max_lag = config
        .attacks
        .iter()
        .filter_map(|a| match a {
            AttackSpec::Lagged(k) => Some(*k),
            _ => None,
        })
        .max()
        .unwrap_or(0);
    if config.rounds <= max_lag {
        return Err(Error::Config(format!(
            "rounds = {} leaves no round after the largest lag {max_lag}",
            config.rounds
        )));
    }
    Ok(run_simulation(config)?.attack_summary(max_lag + 1))
}
