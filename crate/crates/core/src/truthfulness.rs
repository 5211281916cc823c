//! Exhaustive search over deterministic strategy profiles.
//!
//! A deterministic strategy is a map `[L] -> [L]`, indexed here by its
//! base-`L` digits (digit `a` is the image of `a`). For a fixed `f1` the
//! reward is separable in `f2`: `E = sum_b V[b][f2(b)]` with
//! `V[b][r] = sum_a delta(a,b) S(f1(a), r)`, so each pair costs `O(L)`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::delta::{check_categorical, DeltaMatrix, Provenance};
use crate::error::{Error, Result};
use crate::mechanism::ScoreMatrix;
use crate::noniid::dirichlet;
use crate::strategy::is_bijection;
use crate::world::{Label, LabelSpace};

/// Largest label count enumerated exhaustively (`L^L` squared profiles).
pub const MAX_ENUMERATION_LABELS: usize = 5;

/// Values within this of the maximum count as maximizers.
pub const TIE_TOL: f64 = 1e-12;

pub fn map_count(labels: LabelSpace) -> usize {
    labels.size().pow(labels.size() as u32)
}

pub fn decode_map(index: usize, labels: LabelSpace) -> Vec<Label> {
    let l = labels.size();
    let mut x = index;
    (0..l)
        .map(|_| {
            let d = x % l;
            x /= l;
            d as Label
        })
        .collect()
}

pub fn encode_map(map: &[Label], labels: LabelSpace) -> usize {
    map.iter().rev().fold(0, |acc, &d| acc * labels.size() + d as usize)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyProfileScore {
    pub f1: Vec<Label>,
    pub f2: Vec<Label>,
    pub value: f64,
    pub is_shared_bijection: bool,
}

impl StrategyProfileScore {
    fn new(f1: Vec<Label>, f2: Vec<Label>, value: f64) -> Self {
        let is_shared_bijection = f1 == f2 && is_bijection(&f1);
        Self {
            f1,
            f2,
            value,
            is_shared_bijection,
        }
    }
}

fn check_inputs(delta: &DeltaMatrix, score: &ScoreMatrix) -> Result<LabelSpace> {
    let labels = delta.labels();
    if labels.size() > MAX_ENUMERATION_LABELS {
        return Err(Error::LabelSpaceTooLarge {
            labels: labels.size(),
            max: MAX_ENUMERATION_LABELS,
        });
    }
    if score.labels() != labels {
        return Err(Error::DimensionMismatch {
            what: "score matrix vs delta".into(),
            expected: labels.size(),
            got: score.labels().size(),
        });
    }
    Ok(labels)
}

/// `V[b * L + r]` for one `f1`.
fn partial_values(delta: &DeltaMatrix, score: &ScoreMatrix, f1: &[Label]) -> Vec<f64> {
    let l = delta.size();
    let mut v = vec![0.0; l * l];
    for b in 0..l {
        for r in 0..l {
            let mut s = 0.0;
            for (a, &fa) in f1.iter().enumerate() {
                if score.score(fa, r as Label) == 1 {
                    s += delta.get(a, b);
                }
            }
            v[b * l + r] = s;
        }
    }
    v
}

/// Calls `visit(f2_index, value)` for every `f2`, in index order.
fn for_each_f2(v: &[f64], l: usize, mut visit: impl FnMut(usize, f64)) {
    let count = l.pow(l as u32);
    let mut digits = vec![0usize; l];
    for idx in 0..count {
        let value: f64 = digits.iter().enumerate().map(|(b, &r)| v[b * l + r]).sum();
        visit(idx, value);
        for d in digits.iter_mut() {
            *d += 1;
            if *d < l {
                break;
            }
            *d = 0;
        }
    }
}

/// Every deterministic profile with its expected reward, best first. Ties
/// keep enumeration order.
pub fn enumerate_profiles(delta: &DeltaMatrix, score: &ScoreMatrix) -> Result<Vec<StrategyProfileScore>> {
    enumerate_top_profiles(delta, score, usize::MAX)
}

/// The first `limit` rows of [`enumerate_profiles`].
pub fn enumerate_top_profiles(
    delta: &DeltaMatrix,
    score: &ScoreMatrix,
    limit: usize,
) -> Result<Vec<StrategyProfileScore>> {
    let labels = check_inputs(delta, score)?;
    let l = labels.size();
    let n = map_count(labels);
    let mut all: Vec<(u32, u32, f64)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i1| {
            let v = partial_values(delta, score, &decode_map(i1, labels));
            let mut out = Vec::with_capacity(n);
            for_each_f2(&v, l, |i2, x| out.push((i1 as u32, i2 as u32, x)));
            out
        })
        .collect();
    all.sort_by(|a, b| b.2.total_cmp(&a.2));
    all.truncate(limit);
    Ok(all
        .into_iter()
        .map(|(i1, i2, x)| StrategyProfileScore::new(decode_map(i1 as usize, labels), decode_map(i2 as usize, labels), x))
        .collect())
}

/// What the maximizer set of an enumeration looks like.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileSummary {
    pub labels: usize,
    pub profiles: usize,
    pub max_value: f64,
    pub truthful_value: f64,
    pub maximizers: usize,
    pub maximizers_all_shared_bijections: bool,
    /// Best value over profiles that are not shared bijections.
    pub best_other_value: f64,
    /// Largest value reached by a profile where either side is constant.
    pub max_abs_constant_value: f64,
}

impl ProfileSummary {
    pub fn truthful_is_max(&self) -> bool {
        self.truthful_value >= self.max_value - TIE_TOL
    }

    /// Truth beats every non-shared-bijection profile by more than the tie
    /// tolerance.
    pub fn strictly_truthful(&self) -> bool {
        self.truthful_value > self.best_other_value + TIE_TOL
    }
}

#[derive(Clone, Copy)]
struct Partial {
    max: f64,
    best_other: f64,
    constant: f64,
}

/// Streaming summary of the full enumeration; no profile list is kept.
pub fn summarize_profiles(delta: &DeltaMatrix, score: &ScoreMatrix) -> Result<ProfileSummary> {
    let labels = check_inputs(delta, score)?;
    let l = labels.size();
    let n = map_count(labels);
    let is_constant = |m: &[Label]| m.iter().all(|&x| x == m[0]);
    let shared_bijection: Vec<bool> = (0..n).map(|i| is_bijection(&decode_map(i, labels))).collect();
    let constant: Vec<bool> = (0..n).map(|i| is_constant(&decode_map(i, labels))).collect();

    // pass 1: max, best non-shared-bijection value, constant extremes
    let partials: Vec<Partial> = (0..n)
        .into_par_iter()
        .map(|i1| {
            let v = partial_values(delta, score, &decode_map(i1, labels));
            let mut p = Partial {
                max: f64::NEG_INFINITY,
                best_other: f64::NEG_INFINITY,
                constant: 0.0,
            };
            for_each_f2(&v, l, |i2, x| {
                p.max = p.max.max(x);
                if !(i1 == i2 && shared_bijection[i1]) {
                    p.best_other = p.best_other.max(x);
                }
                if constant[i1] || constant[i2] {
                    p.constant = p.constant.max(x.abs());
                }
            });
            p
        })
        .collect();
    let max_value = partials.iter().map(|p| p.max).fold(f64::NEG_INFINITY, f64::max);
    let best_other_value = partials.iter().map(|p| p.best_other).fold(f64::NEG_INFINITY, f64::max);
    let max_abs_constant_value = partials.iter().map(|p| p.constant).fold(0.0, f64::max);

    // pass 2: count maximizers against the global max
    let (maximizers, all_shared) = (0..n)
        .into_par_iter()
        .map(|i1| {
            let v = partial_values(delta, score, &decode_map(i1, labels));
            let mut count = 0usize;
            let mut shared = true;
            for_each_f2(&v, l, |i2, x| {
                if x >= max_value - TIE_TOL {
                    count += 1;
                    shared &= i1 == i2 && shared_bijection[i1];
                }
            });
            (count, shared)
        })
        .reduce(|| (0, true), |a, b| (a.0 + b.0, a.1 && b.1));

    let identity: Vec<Label> = (0..l as Label).collect();
    let v_id = partial_values(delta, score, &identity);
    let truthful_value = (0..l).map(|b| v_id[b * l + b]).sum();
    Ok(ProfileSummary {
        labels: l,
        profiles: n * n,
        max_value,
        truthful_value,
        maximizers,
        maximizers_all_shared_bijections: all_shared,
        best_other_value,
        max_abs_constant_value,
    })
}

/// Samples `samples` random deterministic profiles, for label spaces too
/// large to enumerate. Not exhaustive. Shared bijections are not favoured.
pub fn random_profile_search<R: Rng + ?Sized>(
    delta: &DeltaMatrix,
    score: &ScoreMatrix,
    samples: usize,
    rng: &mut R,
) -> Result<Vec<StrategyProfileScore>> {
    let labels = delta.labels();
    if score.labels() != labels {
        return Err(Error::DimensionMismatch {
            what: "score matrix vs delta".into(),
            expected: labels.size(),
            got: score.labels().size(),
        });
    }
    let l = labels.size();
    let mut out: Vec<StrategyProfileScore> = (0..samples)
        .map(|_| {
            let f1: Vec<Label> = (0..l).map(|_| rng.random_range(0..l) as Label).collect();
            let f2: Vec<Label> = (0..l).map(|_| rng.random_range(0..l) as Label).collect();
            let value = crate::mechanism::deterministic_reward(delta, score, &f1, &f2);
            StrategyProfileScore::new(f1, f2, value)
        })
        .collect();
    out.sort_by(|a, b| b.value.total_cmp(&a.value));
    Ok(out)
}

/// Non-identity bijection maximizing `|O| = -sum_a delta(a, pi(a))`.
pub fn worst_case_permutation(delta: &DeltaMatrix) -> Result<Vec<Label>> {
    let labels = delta.labels();
    let l = labels.size();
    if l > MAX_ENUMERATION_LABELS {
        return Err(Error::LabelSpaceTooLarge {
            labels: l,
            max: MAX_ENUMERATION_LABELS,
        });
    }
    let mut best: Option<(f64, Vec<Label>)> = None;
    for idx in 0..map_count(labels) {
        let pi = decode_map(idx, labels);
        if !is_bijection(&pi) || pi.iter().enumerate().all(|(a, &p)| a == p as usize) {
            continue;
        }
        let off: f64 = -(0..l).map(|a| delta.get(a, pi[a] as usize)).sum::<f64>();
        if best.as_ref().is_none_or(|(b, _)| off > *b) {
            best = Some((off, pi));
        }
    }
    Ok(best.expect("L >= 2 has a non-identity bijection").1)
}

/// A random delta satisfying the categorical-world condition, built as the
/// report covariance of two clients sharing a random diagonally dominant
/// channel under a random prior. Rejection-sampled.
pub fn random_categorical_delta<R: Rng + ?Sized>(labels: LabelSpace, rng: &mut R) -> DeltaMatrix {
    let l = labels.size();
    loop {
        let prior = dirichlet(2.0, l, rng);
        let channel: Vec<Vec<f64>> = (0..l)
            .map(|y| {
                let keep = rng.random_range(0.5..0.95);
                let noise = dirichlet(1.0, l, rng);
                (0..l)
                    .map(|a| (1.0 - keep) * noise[a] + if a == y { keep } else { 0.0 })
                    .collect()
            })
            .collect();
        let marginal: Vec<f64> = (0..l).map(|a| (0..l).map(|y| prior[y] * channel[y][a]).sum()).collect();
        let entries: Vec<f64> = (0..l * l)
            .map(|i| {
                let (a, b) = (i / l, i % l);
                (0..l).map(|y| prior[y] * channel[y][a] * channel[y][b]).sum::<f64>() - marginal[a] * marginal[b]
            })
            .collect();
        let delta = DeltaMatrix::new(labels, entries, Provenance::Provided).expect("covariance entries are bounded");
        if check_categorical(&delta).holds {
            return delta;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::{ca_score_matrix, kfca_expected_reward};
    use crate::rng::{Domain, Streams};

    fn alpha_01() -> DeltaMatrix {
        DeltaMatrix::from_rows(&[vec![0.16, -0.16], vec![-0.16, 0.16]]).unwrap()
    }

    /// Straight double loop over every pair of maps.
    fn naive(delta: &DeltaMatrix, score: &ScoreMatrix) -> Vec<(usize, usize, f64)> {
        let labels = delta.labels();
        let l = labels.size();
        let n = map_count(labels);
        let mut out = Vec::new();
        for i1 in 0..n {
            for i2 in 0..n {
                let (f1, f2) = (decode_map(i1, labels), decode_map(i2, labels));
                let mut v = 0.0;
                for a in 0..l {
                    for b in 0..l {
                        v += delta.get(a, b) * score.score(f1[a], f2[b]) as f64;
                    }
                }
                out.push((i1, i2, v));
            }
        }
        out
    }

    #[test]
    fn map_codec() {
        let l = LabelSpace::new(3).unwrap();
        for i in 0..27 {
            assert_eq!(encode_map(&decode_map(i, l), l), i);
        }
        assert_eq!(decode_map(encode_map(&[2, 0, 1], l), l), vec![2, 0, 1]);
    }

    #[test]
    fn binary_kfca_maximizers() {
        let d = alpha_01();
        let profiles = enumerate_profiles(&d, &ScoreMatrix::kfca(d.labels())).unwrap();
        assert_eq!(profiles.len(), 16);
        let top: Vec<_> = profiles.iter().filter(|p| p.value >= 0.32 - 1e-12).collect();
        assert_eq!(top.len(), 2);
        assert!(top.iter().all(|p| p.is_shared_bijection && (p.value - 0.32).abs() < 1e-15));
        let mut maps: Vec<_> = top.iter().map(|p| p.f1.clone()).collect();
        maps.sort();
        assert_eq!(maps, vec![vec![0, 1], vec![1, 0]]);
    }

    #[test]
    fn zero_delta_scores_zero() {
        let d = DeltaMatrix::zeros(LabelSpace::binary());
        let profiles = enumerate_profiles(&d, &ScoreMatrix::kfca(d.labels())).unwrap();
        assert!(profiles.iter().all(|p| p.value == 0.0));
    }

    #[test]
    fn too_many_labels() {
        let d = DeltaMatrix::zeros(LabelSpace::new(6).unwrap());
        assert_eq!(
            enumerate_profiles(&d, &ScoreMatrix::kfca(d.labels())),
            Err(Error::LabelSpaceTooLarge { labels: 6, max: 5 })
        );
    }

    #[test]
    fn enumeration_matches_naive_oracle() {
        let mut rng = Streams::new(3).stream(Domain::Trial, &[]);
        for l in 2..=3 {
            let d = random_categorical_delta(LabelSpace::new(l).unwrap(), &mut rng);
            for score in [ScoreMatrix::kfca(d.labels()), ca_score_matrix(&d)] {
                let mut fast: Vec<_> = enumerate_profiles(&d, &score)
                    .unwrap()
                    .into_iter()
                    .map(|p| (encode_map(&p.f1, d.labels()), encode_map(&p.f2, d.labels()), p.value))
                    .collect();
                fast.sort_by_key(|p| (p.0, p.1));
                let slow = naive(&d, &score);
                assert_eq!(fast.len(), slow.len());
                for (a, b) in fast.iter().zip(&slow) {
                    assert_eq!((a.0, a.1), (b.0, b.1));
                    assert!((a.2 - b.2).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn summary_agrees_with_full_list() {
        let mut rng = Streams::new(8).stream(Domain::Trial, &[]);
        let d = random_categorical_delta(LabelSpace::new(3).unwrap(), &mut rng);
        let score = ScoreMatrix::kfca(d.labels());
        let s = summarize_profiles(&d, &score).unwrap();
        let all = enumerate_profiles(&d, &score).unwrap();
        assert_eq!(s.profiles, 729);
        assert_eq!(s.max_value, all[0].value);
        assert_eq!(s.maximizers, 6);
        assert!(s.maximizers_all_shared_bijections && s.strictly_truthful() && s.truthful_is_max());
        assert_eq!(s.best_other_value, all[6].value);
        assert!(s.max_abs_constant_value < 1e-15);
    }

    #[test]
    fn ca_ties_truth_with_flip() {
        let d = DeltaMatrix::from_rows(&[vec![-0.25, 0.25], vec![0.25, -0.25]]).unwrap();
        let s = summarize_profiles(&d, &ca_score_matrix(&d)).unwrap();
        assert_eq!(s.max_value, 0.5);
        assert!(s.truthful_is_max());
        // (id, id) and (flip, flip)
        assert_eq!(s.maximizers, 2);
    }

    #[test]
    fn ca_ties_when_labels_share_a_positive_block() {
        // labels 1 and 2 co-occur above chance, so merging them costs nothing
        let d = DeltaMatrix::from_rows(&[
            vec![0.2, -0.1, -0.1],
            vec![-0.1, 0.05, 0.05],
            vec![-0.1, 0.05, 0.05],
        ])
        .unwrap();
        let s = summarize_profiles(&d, &ca_score_matrix(&d)).unwrap();
        assert!(s.truthful_is_max());
        assert!(!s.strictly_truthful());
        assert!(s.maximizers > 6);
    }

    #[test]
    fn worst_permutation_maximizes_offdiagonal_mass() {
        let d = alpha_01();
        assert_eq!(worst_case_permutation(&d).unwrap(), vec![1, 0]);
        let mut rng = Streams::new(4).stream(Domain::Trial, &[]);
        let d = random_categorical_delta(LabelSpace::new(4).unwrap(), &mut rng);
        let pi = worst_case_permutation(&d).unwrap();
        assert!(is_bijection(&pi));
        let id: Vec<Label> = (0..4).collect();
        let o = |p: &[Label]| -kfca_expected_reward(&d, &id, p);
        // brute force over all 24 permutations by rejection on 256 maps
        for idx in 0..256 {
            let p = decode_map(idx, d.labels());
            if is_bijection(&p) && p != id {
                assert!(o(&pi) >= o(&p) - 1e-15);
            }
        }
    }

    #[test]
    fn random_search_values_are_exact() {
        let mut rng = Streams::new(6).stream(Domain::Trial, &[]);
        let d = random_categorical_delta(LabelSpace::new(7).unwrap(), &mut rng);
        let found = random_profile_search(&d, &ScoreMatrix::kfca(d.labels()), 50, &mut rng).unwrap();
        assert_eq!(found.len(), 50);
        for p in &found {
            assert!((p.value - kfca_expected_reward(&d, &p.f1, &p.f2)).abs() < 1e-15);
        }
    }
}
