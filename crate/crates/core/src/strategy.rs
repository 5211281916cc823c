use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::categorical;
use crate::world::{validate_channel, Label, LabelSpace};

/// How a client turns its private signal into a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportStrategy {
    Truthful,
    /// `sigma[a]` is reported for signal `a`; must be a bijection.
    Permutation(Vec<Label>),
    Constant(Label),
    DeterministicMap(Vec<Label>),
    /// Row `a` is the report distribution for signal `a`.
    Randomized(Matrix),
}

pub fn is_bijection(map: &[Label]) -> bool {
    let mut seen = vec![false; map.len()];
    for &r in map {
        match seen.get_mut(r as usize) {
            Some(s) if !*s => *s = true,
            _ => return false,
        }
    }
    true
}

impl ReportStrategy {
    pub fn permutation(sigma: Vec<Label>) -> Result<Self> {
        if !is_bijection(&sigma) {
            return Err(Error::InvalidStrategy(format!("{sigma:?} is not a bijection")));
        }
        Ok(Self::Permutation(sigma))
    }

    /// The label-reversing bijection `a -> L - 1 - a` (binary: `1 - a`).
    pub fn flip(labels: LabelSpace) -> Self {
        let l = labels.size();
        Self::Permutation((0..l).rev().map(|a| a as Label).collect())
    }

    pub fn validate(&self, labels: LabelSpace) -> Result<()> {
        let l = labels.size();
        match self {
            Self::Truthful => Ok(()),
            Self::Constant(r) => labels.check(*r as usize),
            Self::Permutation(map) | Self::DeterministicMap(map) => {
                if map.len() != l {
                    return Err(Error::DimensionMismatch {
                        what: "strategy map".into(),
                        expected: l,
                        got: map.len(),
                    });
                }
                for &r in map {
                    labels.check(r as usize)?;
                }
                if matches!(self, Self::Permutation(_)) && !is_bijection(map) {
                    return Err(Error::InvalidStrategy(format!("{map:?} is not a bijection")));
                }
                Ok(())
            }
            Self::Randomized(f) => validate_channel("randomized strategy", f, l),
        }
    }

    pub fn apply<R: Rng + ?Sized>(&self, signal: Label, rng: &mut R) -> Label {
        match self {
            Self::Truthful => signal,
            Self::Permutation(map) | Self::DeterministicMap(map) => map[signal as usize],
            Self::Constant(r) => *r,
            Self::Randomized(f) => categorical(f.row(signal as usize), rng) as Label,
        }
    }

    /// The strategy as a map `[L] -> [L]`, if it is deterministic.
    pub fn as_map(&self, labels: LabelSpace) -> Option<Vec<Label>> {
        let l = labels.size();
        match self {
            Self::Truthful => Some((0..l).map(|a| a as Label).collect()),
            Self::Permutation(map) | Self::DeterministicMap(map) => Some(map.clone()),
            Self::Constant(r) => Some(vec![*r; l]),
            Self::Randomized(_) => None,
        }
    }

    /// Row-stochastic matrix `F(r | a)`.
    pub fn transition(&self, labels: LabelSpace) -> Matrix {
        match self {
            Self::Randomized(f) => f.clone(),
            _ => {
                let map = self.as_map(labels).expect("deterministic strategy");
                let l = labels.size();
                Matrix::from_fn(l, l, |a, r| if map[a] as usize == r { 1.0 } else { 0.0 })
            }
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Truthful => "truthful",
            Self::Permutation(_) => "permutation",
            Self::Constant(_) => "constant",
            Self::DeterministicMap(_) => "deterministic",
            Self::Randomized(_) => "randomized",
        }
    }
}
