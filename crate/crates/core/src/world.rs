//! Synthetic signal worlds.
//!
//! A [`SignalWorld`] fixes a categorical prior over latent truths and, per
//! client, an informative channel `P_i(a | y)` used when the client exerts
//! effort, an uninformative baseline `Q_i(a)` used when it shirks, and the
//! probability `eta_i` of exerting effort on any given task.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{categorical, TaskStream};

/// A report or signal label, 0-based.
pub type Label = u16;

/// Tolerance for probability vectors and channel rows.
pub const PROB_TOL: f64 = 1e-12;

/// Largest label count accepted anywhere in the crate.
pub const MAX_LABELS: usize = 1 << 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct LabelSpace(usize);

impl LabelSpace {
    pub fn new(labels: usize) -> Result<Self> {
        if labels < 2 {
            return Err(Error::TooFewLabels(labels));
        }
        if labels > MAX_LABELS {
            return Err(Error::Format(format!(
                "label count {labels} exceeds the supported maximum {MAX_LABELS}"
            )));
        }
        Ok(Self(labels))
    }

    pub fn binary() -> Self {
        Self(2)
    }

    pub fn size(self) -> usize {
        self.0
    }

    pub fn contains(self, label: usize) -> bool {
        label < self.0
    }

    pub fn check(self, label: usize) -> Result<()> {
        if self.contains(label) {
            Ok(())
        } else {
            Err(Error::LabelOutOfRange {
                label,
                labels: self.0,
            })
        }
    }

    pub fn uniform(self) -> Vec<f64> {
        vec![1.0 / self.0 as f64; self.0]
    }
}

impl TryFrom<usize> for LabelSpace {
    type Error = Error;
    fn try_from(v: usize) -> Result<Self> {
        Self::new(v)
    }
}

impl From<LabelSpace> for usize {
    fn from(l: LabelSpace) -> usize {
        l.0
    }
}

pub(crate) fn validate_distribution(what: &str, v: &[f64], len: usize) -> Result<()> {
    if v.len() != len {
        return Err(Error::DimensionMismatch {
            what: what.to_string(),
            expected: len,
            got: v.len(),
        });
    }
    if let Some(x) = v.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::InvalidDistribution {
            what: what.to_string(),
            reason: format!("entry {x} is negative or not finite"),
        });
    }
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(Error::InvalidDistribution {
            what: what.to_string(),
            reason: format!("sums to {sum}"),
        });
    }
    Ok(())
}

pub(crate) fn validate_channel(what: &str, m: &Matrix, labels: usize) -> Result<()> {
    if m.rows() != labels || m.cols() != labels {
        return Err(Error::DimensionMismatch {
            what: what.to_string(),
            expected: labels,
            got: if m.rows() != labels { m.rows() } else { m.cols() },
        });
    }
    for r in 0..labels {
        validate_distribution(what, m.row(r), labels).map_err(|e| Error::InvalidChannel {
            what: what.to_string(),
            row: r,
            reason: e.to_string(),
        })?;
    }
    Ok(())
}

/// Symmetric noisy channel: correct with probability `1 - alpha`, otherwise
/// uniform over the `L - 1` wrong labels.
pub fn symmetric_channel(labels: LabelSpace, alpha: f64) -> Matrix {
    let l = labels.size();
    let off = alpha / (l - 1) as f64;
    Matrix::from_fn(l, l, |y, a| if y == a { 1.0 - alpha } else { off })
}

/// One client's view of the world.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClientChannel {
    pub channel: Matrix,
    pub baseline: Vec<f64>,
    pub effort: f64,
    /// When set, the channel must be strictly diagonally dominant.
    pub informative: bool,
}

impl ClientChannel {
    pub fn symmetric(labels: LabelSpace, alpha: f64) -> Self {
        let l = labels.size() as f64;
        Self {
            channel: symmetric_channel(labels, alpha),
            baseline: labels.uniform(),
            effort: 1.0,
            informative: alpha < (l - 1.0) / l,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalWorld {
    labels: LabelSpace,
    prior: Vec<f64>,
    clients: Vec<ClientChannel>,
}

impl SignalWorld {
    pub fn new(labels: LabelSpace, prior: Vec<f64>, clients: Vec<ClientChannel>) -> Result<Self> {
        let l = labels.size();
        validate_distribution("prior", &prior, l)?;
        for (i, c) in clients.iter().enumerate() {
            validate_channel(&format!("channel of client {i}"), &c.channel, l)?;
            validate_distribution(&format!("baseline of client {i}"), &c.baseline, l)?;
            if !(0.0..=1.0).contains(&c.effort) {
                return Err(Error::InvalidEffort(c.effort));
            }
            if c.informative {
                for y in 0..l {
                    let diag = c.channel.get(y, y);
                    if (0..l).any(|a| a != y && c.channel.get(y, a) >= diag) {
                        return Err(Error::InvalidChannel {
                            what: format!("channel of client {i}"),
                            row: y,
                            reason: "flagged informative but not diagonally dominant".into(),
                        });
                    }
                }
            }
        }
        Ok(Self {
            labels,
            prior,
            clients,
        })
    }

    /// Uniform prior, symmetric channels with the given per-client noise rates,
    /// uniform baselines and full effort.
    pub fn symmetric(labels: LabelSpace, alphas: &[f64]) -> Result<Self> {
        for &a in alphas {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::InvalidAlpha(a));
            }
        }
        let clients = alphas
            .iter()
            .map(|&a| ClientChannel::symmetric(labels, a))
            .collect();
        Self::new(labels, labels.uniform(), clients)
    }

    pub fn binary_symmetric(alphas: &[f64]) -> Result<Self> {
        Self::symmetric(LabelSpace::binary(), alphas)
    }

    pub fn with_prior(mut self, prior: Vec<f64>) -> Result<Self> {
        validate_distribution("prior", &prior, self.labels.size())?;
        self.prior = prior;
        Ok(self)
    }

    pub fn with_effort(mut self, client: usize, effort: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&effort) {
            return Err(Error::InvalidEffort(effort));
        }
        self.client_checked(client)?;
        self.clients[client].effort = effort;
        Ok(self)
    }

    pub fn labels(&self) -> LabelSpace {
        self.labels
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn clients(&self) -> usize {
        self.clients.len()
    }

    pub fn client(&self, i: usize) -> &ClientChannel {
        &self.clients[i]
    }

    pub(crate) fn client_checked(&self, i: usize) -> Result<&ClientChannel> {
        self.clients.get(i).ok_or(Error::DimensionMismatch {
            what: "client index".into(),
            expected: self.clients.len(),
            got: i,
        })
    }

    /// Report distribution given the truth once effort is mixed in:
    /// `eta * P(a|y) + (1 - eta) * Q(a)`.
    pub fn effective_channel(&self, i: usize) -> Matrix {
        let c = &self.clients[i];
        let l = self.labels.size();
        Matrix::from_fn(l, l, |y, a| {
            c.effort * c.channel.get(y, a) + (1.0 - c.effort) * c.baseline[a]
        })
    }

    pub fn sample_truth<R: Rng + ?Sized>(&self, rng: &mut R) -> Label {
        categorical(&self.prior, rng) as Label
    }

    pub fn sample_truths<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Vec<Label> {
        (0..m).map(|_| self.sample_truth(rng)).collect()
    }

    /// Draws `Z_i` given the truth and the effort indicator.
    pub fn sample_signal<R: Rng + ?Sized>(&self, i: usize, truth: Label, effort: bool, rng: &mut R) -> Label {
        let c = &self.clients[i];
        let dist = if effort {
            c.channel.row(truth as usize)
        } else {
            &c.baseline[..]
        };
        categorical(dist, rng) as Label
    }

    pub fn sample_effort<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> bool {
        let eta = self.clients[i].effort;
        if eta >= 1.0 {
            return true;
        }
        rng.random::<f64>() < eta
    }

    /// Signals for every task, task `k` drawing from its own slot of `stream`.
    pub fn sample_client_signals(&self, i: usize, truths: &[Label], stream: &mut TaskStream) -> Vec<Label> {
        truths
            .iter()
            .enumerate()
            .map(|(k, &y)| {
                let rng = stream.at(k);
                let effort = self.sample_effort(i, rng);
                self.sample_signal(i, y, effort, rng)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Domain, Streams};

    #[test]
    fn rejects_bad_prior() {
        let l = LabelSpace::binary();
        let c = ClientChannel::symmetric(l, 0.1);
        assert!(matches!(
            SignalWorld::new(l, vec![0.6, 0.6], vec![c.clone()]),
            Err(Error::InvalidDistribution { .. })
        ));
        assert!(SignalWorld::new(l, vec![0.5, 0.5], vec![c]).is_ok());
    }

    #[test]
    fn rejects_non_dominant_informative_channel() {
        let l = LabelSpace::binary();
        let mut c = ClientChannel::symmetric(l, 0.6);
        c.informative = true;
        assert!(matches!(
            SignalWorld::new(l, l.uniform(), vec![c]),
            Err(Error::InvalidChannel { .. })
        ));
    }

    #[test]
    fn label_space_needs_two() {
        assert_eq!(LabelSpace::new(1), Err(Error::TooFewLabels(1)));
    }

    #[test]
    fn degenerate_prior_gives_constant_truths() {
        let w = SignalWorld::binary_symmetric(&[0.1]).unwrap().with_prior(vec![1.0, 0.0]).unwrap();
        let mut rng = Streams::new(1).stream(Domain::Truth, &[]);
        assert_eq!(w.sample_truths(5, &mut rng), vec![0; 5]);
    }

    #[test]
    fn noiseless_channel_copies_truth() {
        let w = SignalWorld::binary_symmetric(&[0.0]).unwrap();
        let mut rng = Streams::new(2).stream(Domain::Signal, &[]);
        for _ in 0..1000 {
            assert_eq!(w.sample_signal(0, 1, true, &mut rng), 1);
        }
    }

    #[test]
    fn effective_channel_mixes_baseline() {
        let w = SignalWorld::binary_symmetric(&[0.0]).unwrap().with_effort(0, 0.5).unwrap();
        let e = w.effective_channel(0);
        assert!((e.get(0, 0) - 0.75).abs() < 1e-15);
        assert!((e.get(0, 1) - 0.25).abs() < 1e-15);
    }
}
