use rand::Rng;
use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{NoiseSpec, SimConfig, SimMode};
use crate::attack::{apply_attack, AttackSpec};
use crate::delta::{analytic_delta, check_categorical, empirical_delta, CategoricalVerdict};
use crate::enforce::sign_quantize;
use crate::error::Result;
use crate::mechanism::{make_partition, round_rewards, RewardRecord, RewardRow, ScoreMatrix};
use crate::noniid::noniid_noise_profile;
use crate::reports::ReportMatrix;
use crate::rng::{categorical, Domain, Streams};
use crate::stats::MeanEstimate;
use crate::world::{Label, LabelSpace, SignalWorld};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairVerdict {
    pub round: usize,
    pub client_a: usize,
    pub client_b: usize,
    /// Both clients report honestly.
    pub honest_pair: bool,
    /// Verdict on the delta estimated from this round's reports.
    pub empirical: CategoricalVerdict,
    /// Verdict on the delta implied by the two clients' channels.
    pub analytic_holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub round: usize,
    pub rewards: Vec<RewardRecord>,
    pub verdicts: Vec<PairVerdict>,
    pub honest_mean: f64,
    pub attacker_mean: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimRun {
    pub config: SimConfig,
    /// Realized per-client noise rates.
    pub alphas: Vec<f64>,
    pub rounds: Vec<RoundOutcome>,
}

/// Per-client noise rates, drawing the Dirichlet profile if configured.
pub fn resolve_alphas(config: &SimConfig, streams: &Streams) -> Result<Vec<f64>> {
    Ok(match &config.noise {
        NoiseSpec::Fixed(a) => vec![*a; config.clients],
        NoiseSpec::PerClient(v) => v.clone(),
        NoiseSpec::Dirichlet { concentration, params } => {
            noniid_noise_profile(*concentration, config.clients, params, &mut streams.stream(Domain::Noise, &[]))?
        }
    })
}

pub fn build_world(config: &SimConfig, alphas: &[f64]) -> Result<SignalWorld> {
    let labels = LabelSpace::new(config.labels)?;
    let mut world = SignalWorld::symmetric(labels, alphas)?;
    if config.effort < 1.0 {
        for i in 0..config.clients {
            world = world.with_effort(i, config.effort)?;
        }
    }
    Ok(world)
}

/// Round-`t` truths: fresh in round 1, then each task keeps its previous
/// value with probability `persistence` and is redrawn otherwise.
fn next_truths(world: &SignalWorld, previous: Option<&[Label]>, round: usize, tasks: usize, persistence: f64, streams: &Streams) -> Vec<Label> {
    let mut fresh = streams.task_stream(Domain::Truth, &[round as u64]);
    let mut keep = streams.task_stream(Domain::Persistence, &[round as u64]);
    (0..tasks)
        .map(|k| {
            if let Some(prev) = previous {
                if keep.at(k).random::<f64>() < persistence {
                    return prev[k];
                }
            }
            categorical(world.prior(), fresh.at(k)) as Label
        })
        .collect()
}

/// Honest report of client `i`. In the quantized mode the signal becomes a
/// real-valued update coordinate with a half-normal magnitude, and the
/// report is its sign.
fn honest_report(world: &SignalWorld, mode: SimMode, i: usize, round: usize, truths: &[Label], streams: &Streams) -> Vec<Label> {
    let ids = [round as u64, i as u64];
    let signals = world.sample_client_signals(i, truths, &mut streams.task_stream(Domain::Signal, &ids));
    match mode {
        SimMode::Direct => signals,
        SimMode::Quantized => {
            let mut mag = streams.task_stream(Domain::Magnitude, &ids);
            let update: Vec<f64> = signals
                .iter()
                .enumerate()
                .map(|(k, &z)| {
                    let m: f64 = StandardNormal.sample(mag.at(k));
                    if z == 1 { m.abs() } else { -m.abs() }
                })
                .collect();
            sign_quantize(&update)
        }
    }
}

fn mean_of(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = xs.collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Runs every round. Client work inside a round is parallel; every draw
/// comes from a stream keyed by round and client, so output is identical
/// for any thread count.
pub fn run_simulation(config: &SimConfig) -> Result<SimRun> {
    config.validate()?;
    let streams = Streams::new(config.seed);
    let alphas = resolve_alphas(config, &streams)?;
    let world = build_world(config, &alphas)?;
    let labels = world.labels();
    let score = ScoreMatrix::kfca(labels);
    let n = config.clients;
    let analytic_holds: Vec<Vec<bool>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| i != j && analytic_delta(&world, i, j).is_ok_and(|d| check_categorical(&d).holds))
                .collect()
        })
        .collect();

    let mut histories: Vec<Vec<Vec<Label>>> = vec![Vec::new(); n];
    let mut truths: Option<Vec<Label>> = None;
    let mut rounds = Vec::with_capacity(config.rounds);
    for t in 1..=config.rounds {
        let current = next_truths(&world, truths.as_deref(), t, config.tasks, config.persistence, &streams);
        let honest: Vec<Vec<Label>> = (0..n)
            .into_par_iter()
            .map(|i| honest_report(&world, config.mode, i, t, &current, &streams))
            .collect();
        for (h, row) in histories.iter_mut().zip(honest) {
            h.push(row);
        }
        let rows = (0..n)
            .into_par_iter()
            .map(|i| {
                let ids = [t as u64, i as u64];
                let mut random = streams.task_stream(Domain::Attack, &ids);
                let mut mask = streams.stream(Domain::AttackMask, &ids);
                apply_attack(&config.attacks[i], &histories[i], t, labels, &mut random, &mut mask)
            })
            .collect::<Result<Vec<_>>>()?;
        // only attackers that look back need their history
        for (i, h) in histories.iter_mut().enumerate() {
            if !matches!(config.attacks[i], AttackSpec::Lagged(_) | AttackSpec::Stale) {
                h.last_mut().expect("pushed above").clear();
            }
        }
        let reports = ReportMatrix::from_rows(labels, rows, t)?;
        let partition = make_partition(config.tasks, &config.fractions, &mut streams.stream(Domain::Partition, &[t as u64]))?;
        let rewards = round_rewards(&reports, &partition, &score, config.peers, &streams)?;

        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut streams.stream(Domain::Pairs, &[t as u64]));
        let verdicts = order
            .chunks_exact(2)
            .map(|p| {
                let (a, b) = (p[0].min(p[1]), p[0].max(p[1]));
                let d = empirical_delta(reports.row(a), reports.row(b), labels)?;
                Ok(PairVerdict {
                    round: t,
                    client_a: a,
                    client_b: b,
                    honest_pair: config.attacks[a].is_honest() && config.attacks[b].is_honest(),
                    empirical: check_categorical(&d),
                    analytic_holds: analytic_holds[a][b],
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let is_honest = |r: &&RewardRecord| config.attacks[r.client].is_honest();
        rounds.push(RoundOutcome {
            round: t,
            honest_mean: mean_of(rewards.iter().filter(is_honest).map(|r| r.reward)).unwrap_or(f64::NAN),
            attacker_mean: mean_of(rewards.iter().filter(|r| !is_honest(r)).map(|r| r.reward)),
            rewards,
            verdicts,
        });
        truths = Some(current);
    }
    Ok(SimRun {
        config: config.clone(),
        alphas,
        rounds,
    })
}

impl SimRun {
    pub fn reward_rows(&self) -> Vec<RewardRow> {
        self.rounds
            .iter()
            .flat_map(|r| &r.rewards)
            .map(|rec| RewardRow::new(rec, self.config.attacks[rec.client].to_string()))
            .collect()
    }

    pub fn verdicts(&self) -> Vec<&PairVerdict> {
        self.rounds.iter().flat_map(|r| &r.verdicts).collect()
    }

    /// Mean reward per distinct attack over rounds `>= from_round`, in
    /// order of first appearance among clients. Each (client, round) reward
    /// is one sample.
    pub fn attack_summary(&self, from_round: usize) -> Vec<AttackSummary> {
        let mut out: Vec<(AttackSpec, Vec<usize>, Vec<f64>)> = Vec::new();
        for (i, a) in self.config.attacks.iter().enumerate() {
            match out.iter_mut().find(|(b, _, _)| b == a) {
                Some(entry) => entry.1.push(i),
                None => out.push((*a, vec![i], Vec::new())),
            }
        }
        for round in self.rounds.iter().filter(|r| r.round >= from_round) {
            for rec in &round.rewards {
                let a = &self.config.attacks[rec.client];
                if let Some(entry) = out.iter_mut().find(|(b, _, _)| b == a) {
                    entry.2.push(rec.reward);
                }
            }
        }
        out.into_iter()
            .map(|(attack, clients, samples)| {
                let est = MeanEstimate::from_samples(&samples);
                AttackSummary {
                    attack,
                    clients,
                    mean: est.mean,
                    stderr: est.stderr,
                    samples: est.samples,
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackSummary {
    pub attack: AttackSpec,
    pub clients: Vec<usize>,
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}
