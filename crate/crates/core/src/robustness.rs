//! Honest-client reward when a fraction of the population misreports.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attack::{apply_attack, AttackSpec};
use crate::delta::{analytic_delta, check_categorical, DeltaMatrix};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::mechanism::{client_reward, expected_reward, make_partition, PartitionFractions, ScoreMatrix};
use crate::reports::ReportMatrix;
use crate::rng::{Domain, Streams};
use crate::stats::MeanEstimate;
use crate::strategy::{is_bijection, ReportStrategy};
use crate::world::{validate_channel, validate_distribution, Label, LabelSpace, SignalWorld};

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidLambda(lambda));
    }
    Ok(())
}

/// `(1 - 2 lambda) (1/2 - 2 alpha (1 - alpha))`: expected KFCA reward of an
/// honest binary client with symmetric noise `alpha` when a fraction
/// `lambda` of its peers flip every report.
pub fn binary_robustness(alpha: f64, lambda: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&alpha) {
        return Err(Error::InvalidAlpha(alpha));
    }
    check_lambda(lambda)?;
    Ok((1.0 - 2.0 * lambda) * (0.5 - 2.0 * alpha * (1.0 - alpha)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MulticlassRobustness {
    pub a: f64,
    pub b: f64,
    pub e_penalty: f64,
    pub e_total: f64,
    /// `(A - E_penalty) / (A - B)`, only when `A > B`.
    pub threshold: Option<f64>,
}

/// Multi-class decomposition with honest confusion `alpha[k][l]` and
/// malicious confusion `alpha_tilde[k][l]`:
/// `A = sum pi_k alpha_kl^2`, `B = sum pi_k alpha_kl alpha~_kl`,
/// `E_penalty = sum_l q_l^2` with `q` the population report marginal.
pub fn multiclass_robustness(
    prior: &[f64],
    honest: &Matrix,
    malicious: &Matrix,
    lambda: f64,
) -> Result<MulticlassRobustness> {
    let l = prior.len();
    validate_distribution("prior", prior, l)?;
    validate_channel("honest confusion", honest, l)?;
    validate_channel("malicious confusion", malicious, l)?;
    check_lambda(lambda)?;
    let mut a = 0.0;
    let mut b = 0.0;
    let mut e_penalty = 0.0;
    for col in 0..l {
        let mut q_h = 0.0;
        let mut q_m = 0.0;
        for k in 0..l {
            let h = honest.get(k, col);
            let m = malicious.get(k, col);
            a += prior[k] * h * h;
            b += prior[k] * h * m;
            q_h += prior[k] * h;
            q_m += prior[k] * m;
        }
        let q = (1.0 - lambda) * q_h + lambda * q_m;
        e_penalty += q * q;
    }
    let e_total = (1.0 - lambda) * a + lambda * b - e_penalty;
    // treat rounding-level differences as equality
    let threshold = (a - b > 1e-12).then(|| (a - e_penalty) / (a - b));
    Ok(MulticlassRobustness {
        a,
        b,
        e_penalty,
        e_total,
        threshold,
    })
}

/// `(1 - 2 lambda)(D + |O|)` with `D = sum_a delta(a,a)` and
/// `|O| = -sum_a delta(a, pi(a))`.
pub fn permutation_differential(delta: &DeltaMatrix, pi: &[Label], lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let l = delta.size();
    if pi.len() != l || !is_bijection(pi) {
        return Err(Error::InvalidStrategy(format!("{pi:?} is not a bijection on {l} labels")));
    }
    if pi.iter().enumerate().all(|(a, &p)| a == p as usize) {
        return Err(Error::InvalidStrategy("the identity is not a deviation".into()));
    }
    if !check_categorical(delta).holds {
        return Err(Error::NotCategorical);
    }
    let d = delta.diagonal_sum();
    let o = -(0..l).map(|a| delta.get(a, pi[a] as usize)).sum::<f64>();
    Ok((1.0 - 2.0 * lambda) * (d + o))
}

/// How a malicious client turns its own signals into reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attacker {
    Attack(AttackSpec),
    Strategy(ReportStrategy),
}

impl From<AttackSpec> for Attacker {
    fn from(a: AttackSpec) -> Self {
        Self::Attack(a)
    }
}

impl Attacker {
    pub fn validate(&self, labels: LabelSpace) -> Result<()> {
        match self {
            Self::Attack(a) => a.validate(),
            Self::Strategy(s) => s.validate(labels),
        }
    }

    pub fn transition(&self, labels: LabelSpace) -> Matrix {
        match self {
            Self::Attack(a) => a.single_round_transition(labels),
            Self::Strategy(s) => s.transition(labels),
        }
    }

    /// Single-round transform, so lagged and stale attacks are honest here.
    fn apply(&self, signals: Vec<Label>, labels: LabelSpace, streams: &Streams, client: u64) -> Result<Vec<Label>> {
        let mut random = streams.task_stream(Domain::Attack, &[client]);
        match self {
            Self::Attack(a) => {
                let mut mask = streams.stream(Domain::AttackMask, &[client]);
                apply_attack(a, &[signals], 1, labels, &mut random, &mut mask)
            }
            Self::Strategy(s) => Ok(signals
                .iter()
                .enumerate()
                .map(|(k, &z)| s.apply(z, random.at(k)))
                .collect()),
        }
    }
}

/// How malicious peers are placed around the target client (client 0).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    /// Every other client is malicious independently with probability
    /// `lambda`, redrawn each trial. Matches the closed form for any `n`.
    PopulationMix,
    /// Clients `1..=round(lambda n)` are malicious in every trial, so the
    /// target faces the peer fraction `A / (n - 1)`.
    FixedPopulation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetRole {
    Honest,
    Malicious,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessConfig {
    pub lambda: f64,
    pub attacker: Attacker,
    pub clients: usize,
    pub tasks: usize,
    pub peers: usize,
    pub trials: usize,
    pub fractions: PartitionFractions,
    pub pairing: Pairing,
}

impl RobustnessConfig {
    pub fn new(lambda: f64, attacker: impl Into<Attacker>) -> Self {
        Self {
            lambda,
            attacker: attacker.into(),
            clients: 11,
            tasks: 10_000,
            peers: 10,
            trials: 200,
            fractions: PartitionFractions::default(),
            pairing: Pairing::PopulationMix,
        }
    }

    fn validate(&self, world: &SignalWorld) -> Result<()> {
        check_lambda(self.lambda)?;
        self.attacker.validate(world.labels())?;
        if self.clients < 2 || self.peers == 0 || self.peers > self.clients - 1 {
            return Err(Error::NotEnoughPeers {
                requested: self.peers,
                available: self.clients.saturating_sub(1),
            });
        }
        if world.clients() == 0 {
            return Err(Error::Config("world has no clients".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        self.fractions.validate()
    }

    fn fixed_attackers(&self) -> usize {
        ((self.lambda * self.clients as f64).round() as usize).min(self.clients - 1)
    }

    /// Fraction of the target's potential peers that are malicious.
    pub fn peer_fraction(&self) -> f64 {
        match self.pairing {
            Pairing::PopulationMix => self.lambda,
            Pairing::FixedPopulation => self.fixed_attackers() as f64 / (self.clients - 1) as f64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub lambda: f64,
    /// Attacker share of the whole population (equals `lambda` for the
    /// population mix).
    pub realized_lambda: f64,
    /// Attacker share among the target's potential peers.
    pub peer_fraction: f64,
    /// Exact expected reward of the simulated target.
    pub analytic: f64,
    /// Multi-class closed form at the peer fraction, using client 0's
    /// channel for honest and attacked confusions.
    pub closed_form: f64,
    pub simulated_mean: f64,
    pub simulated_stderr: f64,
    pub threshold: Option<f64>,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub lambda: f64,
    pub analytic: f64,
    pub simulated_mean: f64,
    pub simulated_stderr: f64,
    pub trials: usize,
    pub seed: u64,
}

/// World client used for simulated client `i`.
fn channel_of(world: &SignalWorld, i: usize) -> usize {
    i % world.clients()
}

fn strategy_transition(attacker: &Attacker, labels: LabelSpace, malicious: bool) -> ReportStrategy {
    if malicious {
        ReportStrategy::Randomized(attacker.transition(labels))
    } else {
        ReportStrategy::Truthful
    }
}

/// Exact expected reward of client 0 in the given role: an average over
/// its potential peers of the mixture of honest and malicious behaviour.
fn exact_reward(world: &SignalWorld, cfg: &RobustnessConfig, target: TargetRole) -> Result<f64> {
    let labels = world.labels();
    let score = ScoreMatrix::kfca(labels);
    let f_target = strategy_transition(&cfg.attacker, labels, target == TargetRole::Malicious);
    let honest = ReportStrategy::Truthful;
    let malicious = strategy_transition(&cfg.attacker, labels, true);
    let fixed = cfg.fixed_attackers();
    let mut total = 0.0;
    for j in 1..cfg.clients {
        let delta = analytic_delta(world, channel_of(world, 0), channel_of(world, j))?;
        let e_h = expected_reward(&delta, &score, &f_target, &honest)?;
        let e_m = expected_reward(&delta, &score, &f_target, &malicious)?;
        let w = match cfg.pairing {
            Pairing::PopulationMix => cfg.lambda,
            Pairing::FixedPopulation => f64::from(j <= fixed),
        };
        total += (1.0 - w) * e_h + w * e_m;
    }
    Ok(total / (cfg.clients - 1) as f64)
}

struct Trial {
    honest_rows: Vec<Vec<Label>>,
    malicious: Vec<bool>,
    streams: Streams,
}

fn draw_trial(world: &SignalWorld, cfg: &RobustnessConfig, streams: &Streams, t: usize) -> Result<Trial> {
    let s = streams.child(Domain::Trial, &[t as u64]);
    let truths = world.sample_truths(cfg.tasks, &mut s.stream(Domain::Truth, &[]));
    let honest_rows = (0..cfg.clients)
        .map(|i| world.sample_client_signals(channel_of(world, i), &truths, &mut s.task_stream(Domain::Signal, &[i as u64])))
        .collect();
    let fixed = cfg.fixed_attackers();
    let mut coin = s.stream(Domain::Attack, &[u64::MAX]);
    let malicious = (0..cfg.clients)
        .map(|j| match cfg.pairing {
            _ if j == 0 => false,
            Pairing::PopulationMix => coin.random::<f64>() < cfg.lambda,
            Pairing::FixedPopulation => j <= fixed,
        })
        .collect();
    Ok(Trial {
        honest_rows,
        malicious,
        streams: s,
    })
}

impl Trial {
    fn reward(&self, world: &SignalWorld, cfg: &RobustnessConfig, target: TargetRole) -> Result<f64> {
        let labels = world.labels();
        let rows = self
            .honest_rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let bad = if i == 0 { target == TargetRole::Malicious } else { self.malicious[i] };
                if bad {
                    cfg.attacker.apply(row.clone(), labels, &self.streams, i as u64)
                } else {
                    Ok(row.clone())
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let reports = ReportMatrix::from_rows(labels, rows, 1)?;
        let partition = make_partition(cfg.tasks, &cfg.fractions, &mut self.streams.stream(Domain::Partition, &[]))?;
        let score = ScoreMatrix::kfca(labels);
        let mut rng = self.streams.stream(Domain::Reward, &[0]);
        Ok(client_reward(0, &reports, &partition, &score, cfg.peers, &mut rng)?.reward)
    }
}

/// Monte Carlo estimate of an honest client's KFCA reward, run end to end
/// through the payment engine. Trials run in parallel on independent keyed
/// streams and are merged in trial order.
pub fn simulate_robustness(world: &SignalWorld, cfg: &RobustnessConfig, streams: &Streams) -> Result<RobustnessReport> {
    cfg.validate(world)?;
    let rewards: Vec<f64> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| draw_trial(world, cfg, streams, t)?.reward(world, cfg, TargetRole::Honest))
        .collect::<Result<_>>()?;
    let est = MeanEstimate::from_samples(&rewards);
    let labels = world.labels();
    let honest = world.effective_channel(channel_of(world, 0));
    let attacked = honest.mul(&cfg.attacker.transition(labels));
    let peer_fraction = cfg.peer_fraction();
    let closed = multiclass_robustness(world.prior(), &honest, &attacked, peer_fraction)?;
    let realized_lambda = match cfg.pairing {
        Pairing::PopulationMix => cfg.lambda,
        Pairing::FixedPopulation => cfg.fixed_attackers() as f64 / cfg.clients as f64,
    };
    Ok(RobustnessReport {
        lambda: cfg.lambda,
        realized_lambda,
        peer_fraction,
        analytic: exact_reward(world, cfg, TargetRole::Honest)?,
        closed_form: closed.e_total,
        simulated_mean: est.mean,
        simulated_stderr: est.stderr,
        threshold: closed.threshold,
        trials: cfg.trials,
        seed: streams.root(),
    })
}

/// Reward of client 0 when honest minus its reward when it misreports like
/// the attackers, paired on the same trial draws.
pub fn simulate_gap(world: &SignalWorld, cfg: &RobustnessConfig, streams: &Streams) -> Result<GapReport> {
    cfg.validate(world)?;
    let gaps: Vec<f64> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let trial = draw_trial(world, cfg, streams, t)?;
            Ok(trial.reward(world, cfg, TargetRole::Honest)? - trial.reward(world, cfg, TargetRole::Malicious)?)
        })
        .collect::<Result<_>>()?;
    let est = MeanEstimate::from_samples(&gaps);
    Ok(GapReport {
        lambda: cfg.lambda,
        analytic: exact_reward(world, cfg, TargetRole::Honest)? - exact_reward(world, cfg, TargetRole::Malicious)?,
        simulated_mean: est.mean,
        simulated_stderr: est.stderr,
        trials: cfg.trials,
        seed: streams.root(),
    })
}

/// Sweep table with one row per report.
pub fn robustness_csv(reports: &[RobustnessReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in reports {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}
