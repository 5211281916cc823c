use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{CoalitionOracle, MAX_PLAYERS};
use crate::error::{Error, Result};
use crate::world::SignalWorld;

/// Largest game stored as a full table.
pub const MAX_TABULAR_PLAYERS: usize = 24;

/// A game given by its value on every coalition.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularGame {
    n: usize,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct GameFile {
    n: usize,
    v: BTreeMap<String, f64>,
}

impl TabularGame {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || n > MAX_TABULAR_PLAYERS {
            return Err(Error::TooManyClients {
                clients: n,
                max: MAX_TABULAR_PLAYERS,
            });
        }
        if values.len() != 1 << n {
            return Err(Error::DimensionMismatch {
                what: "coalition values".into(),
                expected: 1 << n,
                got: values.len(),
            });
        }
        if let Some(x) = values.iter().find(|x| !x.is_finite()) {
            return Err(Error::Format(format!("coalition value {x} is not finite")));
        }
        Ok(Self { n, values })
    }

    /// The three-client accuracy table with `v(empty) = 0.1`.
    pub fn worked_example() -> Self {
        Self::new(3, vec![0.1, 0.7, 0.75, 0.85, 0.8, 0.9, 0.95, 0.98]).expect("valid table")
    }

    pub fn tabulate<O: CoalitionOracle + ?Sized>(oracle: &O) -> Result<Self> {
        let n = oracle.players();
        if n > MAX_TABULAR_PLAYERS {
            return Err(Error::TooManyClients {
                clients: n,
                max: MAX_TABULAR_PLAYERS,
            });
        }
        Self::new(n, (0..1u64 << n).map(|s| oracle.value(s)).collect())
    }

    /// JSON `{"n": 3, "v": {"0": 0.1, "1": 0.7, ...}}`, keys being decimal
    /// coalition bitmasks. Every coalition must be present.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: GameFile = serde_json::from_str(text)?;
        if file.n == 0 || file.n > MAX_TABULAR_PLAYERS {
            return Err(Error::TooManyClients {
                clients: file.n,
                max: MAX_TABULAR_PLAYERS,
            });
        }
        let size = 1usize << file.n;
        let mut values = vec![None; size];
        for (key, v) in &file.v {
            let mask: usize = key
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("coalition key {key:?} is not a decimal bitmask")))?;
            let slot = values
                .get_mut(mask)
                .ok_or_else(|| Error::Format(format!("coalition {mask} outside {} players", file.n)))?;
            if slot.replace(*v).is_some() {
                return Err(Error::Format(format!("coalition {mask} given twice")));
            }
        }
        let values = values
            .into_iter()
            .enumerate()
            .map(|(s, v)| v.ok_or_else(|| Error::Format(format!("coalition {s} missing"))))
            .collect::<Result<_>>()?;
        Self::new(file.n, values)
    }

    pub fn to_json(&self) -> String {
        let v = self.values.iter().enumerate().map(|(s, &x)| (s.to_string(), x)).collect();
        serde_json::to_string_pretty(&GameFile { n: self.n, v }).expect("finite values serialize")
    }
}

impl CoalitionOracle for TabularGame {
    fn players(&self) -> usize {
        self.n
    }

    fn value(&self, coalition: u64) -> f64 {
        self.values[coalition as usize]
    }
}

/// A game defined by a closure.
pub struct FnGame<F> {
    n: usize,
    f: F,
}

impl<F: Fn(u64) -> f64 + Sync> FnGame<F> {
    pub fn new(n: usize, f: F) -> Self {
        assert!(n <= MAX_PLAYERS, "at most {MAX_PLAYERS} players");
        Self { n, f }
    }
}

impl<F: Fn(u64) -> f64 + Sync> CoalitionOracle for FnGame<F> {
    fn players(&self) -> usize {
        self.n
    }

    fn value(&self, coalition: u64) -> f64 {
        (self.f)(coalition)
    }
}

/// Coalition utility = probability that the plurality vote of the members'
/// signals equals the truth, ties split evenly among the tied labels. The
/// empty coalition guesses uniformly. Computed exactly by a dynamic
/// program over signal count vectors (ordered, so sums are reproducible), whose size grows like
/// `C(|S| + L - 1, L - 1)`.
pub struct MajorityVoteGame {
    n: usize,
    labels: usize,
    prior: Vec<f64>,
    /// `channels[i][y * L + a]`, effort already mixed in.
    channels: Vec<Vec<f64>>,
}

impl MajorityVoteGame {
    pub fn new(world: &SignalWorld) -> Result<Self> {
        let n = world.clients();
        if n == 0 || n > MAX_PLAYERS {
            return Err(Error::TooManyClients {
                clients: n,
                max: MAX_PLAYERS,
            });
        }
        Ok(Self {
            n,
            labels: world.labels().size(),
            prior: world.prior().to_vec(),
            channels: (0..n).map(|i| world.effective_channel(i).as_slice().to_vec()).collect(),
        })
    }
}

impl CoalitionOracle for MajorityVoteGame {
    fn players(&self) -> usize {
        self.n
    }

    fn value(&self, coalition: u64) -> f64 {
        let l = self.labels;
        if coalition == 0 {
            return 1.0 / l as f64;
        }
        let members: Vec<usize> = (0..self.n).filter(|i| coalition >> i & 1 == 1).collect();
        let mut total = 0.0;
        for (y, &py) in self.prior.iter().enumerate() {
            if py == 0.0 {
                continue;
            }
            let mut dist: BTreeMap<Vec<u16>, f64> = BTreeMap::from([(vec![0u16; l], 1.0)]);
            for &i in &members {
                let row = &self.channels[i][y * l..(y + 1) * l];
                let mut next: BTreeMap<Vec<u16>, f64> = BTreeMap::new();
                for (counts, p) in &dist {
                    for (a, &pa) in row.iter().enumerate() {
                        if pa == 0.0 {
                            continue;
                        }
                        let mut c = counts.clone();
                        c[a] += 1;
                        *next.entry(c).or_insert(0.0) += p * pa;
                    }
                }
                dist = next;
            }
            let correct: f64 = dist
                .iter()
                .map(|(counts, p)| {
                    let top = *counts.iter().max().expect("non-empty");
                    if counts[y] < top {
                        return 0.0;
                    }
                    let tied = counts.iter().filter(|&&c| c == top).count();
                    p / tied as f64
                })
                .sum();
            total += py * correct;
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::LabelSpace;

    #[test]
    fn json_round_trip() {
        let g = TabularGame::worked_example();
        assert_eq!(TabularGame::from_json(&g.to_json()).unwrap(), g);
        let text = r#"{"n": 1, "v": {"0": 0.0, "1": 2.5}}"#;
        assert_eq!(TabularGame::from_json(text).unwrap().value(1), 2.5);
    }

    #[test]
    fn json_errors() {
        assert!(TabularGame::from_json(r#"{"n": 2, "v": {"0": 0, "1": 1, "2": 1}}"#).is_err());
        assert!(TabularGame::from_json(r#"{"n": 1, "v": {"0": 0, "1": 1, "2": 1}}"#).is_err());
        assert!(TabularGame::from_json(r#"{"n": 1, "v": {"0": 0, "x": 1}}"#).is_err());
        assert!(TabularGame::from_json(r#"{"n": 0, "v": {}}"#).is_err());
        assert!(TabularGame::from_json(r#"{"n": 40, "v": {}}"#).is_err());
        assert!(TabularGame::from_json("[").is_err());
    }

    #[test]
    fn majority_vote_values() {
        let w = SignalWorld::binary_symmetric(&[0.1, 0.1, 0.0]).unwrap();
        let g = MajorityVoteGame::new(&w).unwrap();
        assert_eq!(g.value(0), 0.5);
        assert!((g.value(0b011) - 0.9).abs() < 1e-15);
        assert!((g.value(0b100) - 1.0).abs() < 1e-15);
        assert!((g.value(0b001) - 0.9).abs() < 1e-15);
        // three voters: correct unless both noisy clients err
        assert!((g.value(0b111) - 0.99).abs() < 1e-15);
    }

    #[test]
    fn majority_vote_is_monotone_for_identical_clients() {
        let w = SignalWorld::symmetric(LabelSpace::new(3).unwrap(), &[0.3; 5]).unwrap();
        let g = MajorityVoteGame::new(&w).unwrap();
        assert!((g.value(0) - 1.0 / 3.0).abs() < 1e-15);
        for s in 0u64..32 {
            for i in 0..5 {
                if s >> i & 1 == 0 {
                    assert!(g.value(s | 1 << i) >= g.value(s) - 1e-12, "{s} + {i}");
                }
            }
        }
    }
}
