//! Scoring rules and the multi-task peer-prediction payment engine.
//!
//! A payment on bonus task `k` compares two clients' reports on `k` and
//! subtracts the score of a mismatched pair `(p1, p2)` drawn from two disjoint
//! penalty sets, so agreement at chance level nets zero.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::delta::{empirical_delta, DeltaMatrix};
use crate::error::{Error, Result};
use crate::reports::{ReportMatrix, MIN_TASKS};
use crate::rng::{Domain, Streams};
use crate::strategy::ReportStrategy;
use crate::world::{Label, LabelSpace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    /// `1{delta(a, b) > 0}` from a delta matrix.
    CorrelatedAgreement,
    /// `1{a == b}`.
    KnowledgeFree,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScoreMatrix {
    labels: LabelSpace,
    entries: Vec<u8>,
    kind: ScoreKind,
}

impl ScoreMatrix {
    pub fn kfca(labels: LabelSpace) -> Self {
        let l = labels.size();
        Self {
            labels,
            entries: (0..l * l).map(|i| u8::from(i / l == i % l)).collect(),
            kind: ScoreKind::KnowledgeFree,
        }
    }

    pub fn labels(&self) -> LabelSpace {
        self.labels
    }

    pub fn kind(&self) -> ScoreKind {
        self.kind
    }

    #[inline]
    pub fn score(&self, a: Label, b: Label) -> u8 {
        self.entries[a as usize * self.labels.size() + b as usize]
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        self.entries.chunks(self.labels.size()).map(<[u8]>::to_vec).collect()
    }
}

/// CA score: 1 exactly where the delta entry is strictly positive.
pub fn ca_score_matrix(delta: &DeltaMatrix) -> ScoreMatrix {
    ScoreMatrix {
        labels: delta.labels(),
        entries: delta.entries().iter().map(|&x| u8::from(x > 0.0)).collect(),
        kind: ScoreKind::CorrelatedAgreement,
    }
}

fn check_labels(delta: &DeltaMatrix, score: &ScoreMatrix) -> Result<LabelSpace> {
    if delta.labels() != score.labels() {
        return Err(Error::DimensionMismatch {
            what: "score matrix vs delta".into(),
            expected: delta.size(),
            got: score.labels().size(),
        });
    }
    Ok(delta.labels())
}

/// Expected per-task payment `sum_{a,b} delta(a,b) E[S(F1(a), F2(b))]`.
/// Randomized strategies are expanded through their transition matrices.
pub fn expected_reward(
    delta: &DeltaMatrix,
    score: &ScoreMatrix,
    f1: &ReportStrategy,
    f2: &ReportStrategy,
) -> Result<f64> {
    let labels = check_labels(delta, score)?;
    f1.validate(labels)?;
    f2.validate(labels)?;
    let l = labels.size();
    if let (Some(m1), Some(m2)) = (f1.as_map(labels), f2.as_map(labels)) {
        return Ok(deterministic_reward(delta, score, &m1, &m2));
    }
    let t1 = f1.transition(labels);
    let t2 = f2.transition(labels);
    let mut total = 0.0;
    for a in 0..l {
        for b in 0..l {
            let d = delta.get(a, b);
            if d == 0.0 {
                continue;
            }
            let mut s = 0.0;
            for r1 in 0..l {
                for r2 in 0..l {
                    s += t1.get(a, r1) * t2.get(b, r2) * score.score(r1 as Label, r2 as Label) as f64;
                }
            }
            total += d * s;
        }
    }
    Ok(total)
}

pub(crate) fn deterministic_reward(delta: &DeltaMatrix, score: &ScoreMatrix, f1: &[Label], f2: &[Label]) -> f64 {
    let l = delta.size();
    let mut total = 0.0;
    for a in 0..l {
        for b in 0..l {
            if score.score(f1[a], f2[b]) == 1 {
                total += delta.get(a, b);
            }
        }
    }
    total
}

/// KFCA expected reward `sum_{a,b} delta(a,b) 1{f1(a) = f2(b)}`.
pub fn kfca_expected_reward(delta: &DeltaMatrix, f1: &[Label], f2: &[Label]) -> f64 {
    let l = delta.size();
    let mut total = 0.0;
    for a in 0..l {
        for b in 0..l {
            if f1[a] == f2[b] {
                total += delta.get(a, b);
            }
        }
    }
    total
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionFractions {
    pub bonus: f64,
    pub penalty_1: f64,
    pub penalty_2: f64,
}

impl Default for PartitionFractions {
    fn default() -> Self {
        Self {
            bonus: 0.5,
            penalty_1: 0.25,
            penalty_2: 0.25,
        }
    }
}

impl PartitionFractions {
    pub fn validate(&self) -> Result<()> {
        let fs = [self.bonus, self.penalty_1, self.penalty_2];
        if fs.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
            return Err(Error::InvalidFractions(format!("{fs:?}: every fraction must be positive")));
        }
        if fs.iter().sum::<f64>() > 1.0 + 1e-12 {
            return Err(Error::InvalidFractions(format!("{fs:?}: fractions sum above 1")));
        }
        Ok(())
    }
}

/// Bonus tasks and two disjoint penalty sets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskPartition {
    bonus: Vec<usize>,
    penalty_1: Vec<usize>,
    penalty_2: Vec<usize>,
}

impl TaskPartition {
    pub fn new(bonus: Vec<usize>, penalty_1: Vec<usize>, penalty_2: Vec<usize>, tasks: usize) -> Result<Self> {
        if tasks < MIN_TASKS {
            return Err(Error::TooFewTasks(tasks));
        }
        let mut seen = vec![false; tasks];
        for (name, set) in [("bonus", &bonus), ("penalty_1", &penalty_1), ("penalty_2", &penalty_2)] {
            if set.is_empty() {
                return Err(Error::InvalidFractions(format!("{name} set is empty")));
            }
            for &k in set {
                match seen.get_mut(k) {
                    Some(s) if !*s => *s = true,
                    Some(_) => return Err(Error::InvalidFractions(format!("task {k} appears twice"))),
                    None => return Err(Error::InvalidFractions(format!("task {k} out of range"))),
                }
            }
        }
        Ok(Self {
            bonus,
            penalty_1,
            penalty_2,
        })
    }

    pub fn bonus(&self) -> &[usize] {
        &self.bonus
    }

    pub fn penalty_1(&self) -> &[usize] {
        &self.penalty_1
    }

    pub fn penalty_2(&self) -> &[usize] {
        &self.penalty_2
    }

    /// Smallest report length the partition can index.
    pub fn min_tasks(&self) -> usize {
        self.bonus
            .iter()
            .chain(&self.penalty_1)
            .chain(&self.penalty_2)
            .max()
            .map_or(0, |k| k + 1)
    }
}

/// Samples disjoint sets of sizes `floor(m * fraction)`, each at least 1.
/// If the minimum-size bump overflows `m`, the bonus set shrinks.
pub fn make_partition<R: Rng + ?Sized>(tasks: usize, fractions: &PartitionFractions, rng: &mut R) -> Result<TaskPartition> {
    if tasks < MIN_TASKS {
        return Err(Error::TooFewTasks(tasks));
    }
    fractions.validate()?;
    let size = |f: f64| ((tasks as f64 * f).floor() as usize).max(1);
    let p1 = size(fractions.penalty_1);
    let p2 = size(fractions.penalty_2);
    let bonus = size(fractions.bonus).min(tasks - p1 - p2);
    let chosen = rand::seq::index::sample(rng, tasks, bonus + p1 + p2).into_vec();
    let sorted = |range: std::ops::Range<usize>| {
        let mut v = chosen[range].to_vec();
        v.sort_unstable();
        v
    };
    let b = sorted(0..bonus);
    let s1 = sorted(bonus..bonus + p1);
    let s2 = sorted(bonus + p1..bonus + p1 + p2);
    TaskPartition::new(b, s1, s2, tasks)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MtppPayments {
    pub payments: Vec<i8>,
    pub mean: f64,
}

fn check_pair(reports_i: &[Label], reports_j: &[Label], partition: &TaskPartition) -> Result<()> {
    if reports_i.len() != reports_j.len() {
        return Err(Error::LengthMismatch {
            left: reports_i.len(),
            right: reports_j.len(),
        });
    }
    if reports_i.len() < partition.min_tasks() {
        return Err(Error::LengthMismatch {
            left: reports_i.len(),
            right: partition.min_tasks(),
        });
    }
    Ok(())
}

/// Sum of payments over the bonus tasks; `(p1, p2)` is redrawn for every `k`.
#[inline]
fn pair_payment_sum<R: Rng + ?Sized>(
    reports_i: &[Label],
    reports_j: &[Label],
    partition: &TaskPartition,
    score: &ScoreMatrix,
    rng: &mut R,
) -> i64 {
    let (m1, m2) = (&partition.penalty_1, &partition.penalty_2);
    let mut sum = 0i64;
    for &k in &partition.bonus {
        let p1 = m1[rng.random_range(0..m1.len())];
        let p2 = m2[rng.random_range(0..m2.len())];
        sum += score.score(reports_i[k], reports_j[k]) as i64 - score.score(reports_i[p1], reports_j[p2]) as i64;
    }
    sum
}

pub fn mtpp_payment<R: Rng + ?Sized>(
    reports_i: &[Label],
    reports_j: &[Label],
    partition: &TaskPartition,
    score: &ScoreMatrix,
    rng: &mut R,
) -> Result<MtppPayments> {
    check_pair(reports_i, reports_j, partition)?;
    let (m1, m2) = (&partition.penalty_1, &partition.penalty_2);
    let payments: Vec<i8> = partition
        .bonus
        .iter()
        .map(|&k| {
            let p1 = m1[rng.random_range(0..m1.len())];
            let p2 = m2[rng.random_range(0..m2.len())];
            score.score(reports_i[k], reports_j[k]) as i8 - score.score(reports_i[p1], reports_j[p2]) as i8
        })
        .collect();
    let mean = payments.iter().map(|&p| p as f64).sum::<f64>() / payments.len() as f64;
    Ok(MtppPayments { payments, mean })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardRecord {
    pub client: usize,
    pub round: usize,
    pub reward: f64,
    pub peers_used: usize,
    pub bonus_tasks: usize,
}

/// Reward of `target` in one round: `P` peers sampled without replacement
/// from the other clients, payments averaged over peers and bonus tasks.
pub fn client_reward<R: Rng + ?Sized>(
    target: usize,
    reports: &ReportMatrix,
    partition: &TaskPartition,
    score: &ScoreMatrix,
    peers: usize,
    rng: &mut R,
) -> Result<RewardRecord> {
    let n = reports.clients();
    if target >= n {
        return Err(Error::DimensionMismatch {
            what: "target client".into(),
            expected: n,
            got: target,
        });
    }
    if peers == 0 || peers > n - 1 {
        return Err(Error::NotEnoughPeers {
            requested: peers,
            available: n - 1,
        });
    }
    if score.labels() != reports.labels() {
        return Err(Error::DimensionMismatch {
            what: "score matrix vs reports".into(),
            expected: reports.labels().size(),
            got: score.labels().size(),
        });
    }
    let mine = reports.row(target);
    check_pair(mine, mine, partition)?;
    let chosen = rand::seq::index::sample(rng, n - 1, peers).into_vec();
    let mut total = 0i64;
    for idx in chosen {
        let peer = if idx >= target { idx + 1 } else { idx };
        total += pair_payment_sum(mine, reports.row(peer), partition, score, rng);
    }
    Ok(RewardRecord {
        client: target,
        round: reports.round(),
        reward: total as f64 / (peers * partition.bonus.len()) as f64,
        peers_used: peers,
        bonus_tasks: partition.bonus.len(),
    })
}

/// Every client's reward for one round. Client `i` draws from the stream
/// keyed `(round, i)`, so results don't depend on thread scheduling.
pub fn round_rewards(
    reports: &ReportMatrix,
    partition: &TaskPartition,
    score: &ScoreMatrix,
    peers: usize,
    streams: &Streams,
) -> Result<Vec<RewardRecord>> {
    let round = reports.round() as u64;
    (0..reports.clients())
        .into_par_iter()
        .map(|i| {
            let mut rng = streams.stream(Domain::Reward, &[round, i as u64]);
            client_reward(i, reports, partition, score, peers, &mut rng)
        })
        .collect()
}

/// CA in estimation mode: for every unordered pair, estimate the delta from
/// the pair's full report vectors, score with its sign pattern, and pay on
/// the shared partition. A client's reward averages over all `n - 1` pairs.
/// Cost is `O(n^2 (m + L^2))` per round.
pub fn ca_round_rewards_empirical(
    reports: &ReportMatrix,
    partition: &TaskPartition,
    streams: &Streams,
) -> Result<Vec<RewardRecord>> {
    let n = reports.clients();
    if n < 2 {
        return Err(Error::NotEnoughPeers {
            requested: 1,
            available: n.saturating_sub(1),
        });
    }
    let round = reports.round() as u64;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let sums: Vec<i64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let delta = empirical_delta(reports.row(i), reports.row(j), reports.labels())?;
            let score = ca_score_matrix(&delta);
            check_pair(reports.row(i), reports.row(j), partition)?;
            let mut rng = streams.stream(Domain::Reward, &[round, i as u64, j as u64]);
            Ok(pair_payment_sum(reports.row(i), reports.row(j), partition, &score, &mut rng))
        })
        .collect::<Result<_>>()?;
    let mut totals = vec![0i64; n];
    for (&(i, j), &s) in pairs.iter().zip(&sums) {
        totals[i] += s;
        totals[j] += s;
    }
    let bonus = partition.bonus.len();
    Ok(totals
        .into_iter()
        .enumerate()
        .map(|(client, t)| RewardRecord {
            client,
            round: reports.round(),
            reward: t as f64 / ((n - 1) * bonus) as f64,
            peers_used: n - 1,
            bonus_tasks: bonus,
        })
        .collect())
}

/// One line of the reward stream CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardRow {
    pub round: usize,
    pub client: usize,
    pub strategy: String,
    pub reward: f64,
    pub peers: usize,
    pub bonus_tasks: usize,
}

impl RewardRow {
    pub fn new(record: &RewardRecord, strategy: impl Into<String>) -> Self {
        Self {
            round: record.round,
            client: record.client,
            strategy: strategy.into(),
            reward: record.reward,
            peers: record.peers_used,
            bonus_tasks: record.bonus_tasks,
        }
    }
}

/// CSV with header `round,client,strategy,reward,peers,bonus_tasks`.
pub fn reward_csv(rows: &[RewardRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}
