//! Attack transformations applied to a client's own honest report history.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{uniform_index, TaskStream};
use crate::strategy::ReportStrategy;
use crate::world::{Label, LabelSpace};

/// Label reported by the all-zero update. Sign quantization maps 0 to the
/// `+1` symbol, stored as label 1.
pub const ZERO_LABEL: Label = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum AttackSpec {
    Honest,
    SignFlip,
    Zero,
    Random,
    /// Honest on this fraction of tasks, uniform-random elsewhere.
    Sparse(f64),
    /// Resubmits the honest report from `k` rounds earlier.
    Lagged(usize),
    /// Resubmits the round-1 report forever.
    Stale,
}

impl AttackSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Sparse(p) if !(0.0..=1.0).contains(&p) => {
                Err(Error::InvalidAttack(format!("sparse fraction {p} outside [0, 1]")))
            }
            Self::Lagged(0) => Err(Error::InvalidAttack("lag must be at least 1".into())),
            _ => Ok(()),
        }
    }

    pub fn is_honest(&self) -> bool {
        matches!(self, Self::Honest)
    }

    /// Per-signal report distribution when the attack is applied to a single
    /// round (lagged and stale variants collapse to honest).
    pub fn single_round_transition(&self, labels: LabelSpace) -> Matrix {
        let l = labels.size();
        let uniform = 1.0 / l as f64;
        match *self {
            Self::Honest | Self::Lagged(_) | Self::Stale => Matrix::identity(l),
            Self::SignFlip => ReportStrategy::flip(labels).transition(labels),
            Self::Zero => ReportStrategy::Constant(ZERO_LABEL).transition(labels),
            Self::Random => Matrix::from_fn(l, l, |_, _| uniform),
            Self::Sparse(p) => Matrix::from_fn(l, l, |a, r| {
                (1.0 - p) * uniform + if a == r { p } else { 0.0 }
            }),
        }
    }
}

impl fmt::Display for AttackSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Honest => write!(f, "honest"),
            Self::SignFlip => write!(f, "sign_flip"),
            Self::Zero => write!(f, "zero"),
            Self::Random => write!(f, "random"),
            Self::Sparse(p) => write!(f, "sparse:{p}"),
            Self::Lagged(k) => write!(f, "lagged:{k}"),
            Self::Stale => write!(f, "stale"),
        }
    }
}

impl FromStr for AttackSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s.as_str(), None),
        };
        let spec = match (name, arg) {
            ("honest", None) => Self::Honest,
            ("sign_flip" | "signflip" | "flip", None) => Self::SignFlip,
            ("zero", None) => Self::Zero,
            ("random", None) => Self::Random,
            ("stale", None) => Self::Stale,
            ("sparse", Some(a)) => {
                let p: f64 = a
                    .parse()
                    .map_err(|_| Error::InvalidAttack(format!("bad sparse fraction {a:?}")))?;
                // accept percentages as in "sparse:75"
                Self::Sparse(if p > 1.0 { p / 100.0 } else { p })
            }
            ("lagged", Some(a)) => Self::Lagged(
                a.parse()
                    .map_err(|_| Error::InvalidAttack(format!("bad lag {a:?}")))?,
            ),
            _ => return Err(Error::InvalidAttack(format!("unknown attack {s:?}"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl TryFrom<String> for AttackSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<AttackSpec> for String {
    fn from(a: AttackSpec) -> String {
        a.to_string()
    }
}

/// Produces the attacker's report for `round` (1-based) from its honest
/// history, where `history[t - 1]` is the honest row of round `t`.
///
/// Random labels for task `k` come from slot `k` of `random`, so `Random` and
/// `Sparse(0.0)` agree under the same stream. `mask_rng` picks the honest
/// coordinates of a sparse attack. A lag reaching before round 1 falls back
/// to the round-1 row.
pub fn apply_attack<R: Rng + ?Sized>(
    attack: &AttackSpec,
    history: &[Vec<Label>],
    round: usize,
    labels: LabelSpace,
    random: &mut TaskStream,
    mask_rng: &mut R,
) -> Result<Vec<Label>> {
    attack.validate()?;
    if round == 0 || round > history.len() {
        return Err(Error::DimensionMismatch {
            what: "attack round vs honest history".into(),
            expected: history.len(),
            got: round,
        });
    }
    let current = &history[round - 1];
    let l = labels.size();
    let random_label = |k: usize, stream: &mut TaskStream| uniform_index(l, stream.at(k)) as Label;
    Ok(match *attack {
        AttackSpec::Honest => current.clone(),
        AttackSpec::SignFlip => current.iter().map(|&r| (l - 1 - r as usize) as Label).collect(),
        AttackSpec::Zero => vec![ZERO_LABEL; current.len()],
        AttackSpec::Random => (0..current.len()).map(|k| random_label(k, random)).collect(),
        AttackSpec::Sparse(p) => {
            let m = current.len();
            let honest = ((p * m as f64).round() as usize).min(m);
            let mut keep = vec![false; m];
            for k in rand::seq::index::sample(mask_rng, m, honest) {
                keep[k] = true;
            }
            (0..m)
                .map(|k| if keep[k] { current[k] } else { random_label(k, random) })
                .collect()
        }
        AttackSpec::Lagged(k) => history[round.saturating_sub(k).max(1) - 1].clone(),
        AttackSpec::Stale => history[0].clone(),
    })
}
