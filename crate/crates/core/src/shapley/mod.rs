//! Shapley values of coalition games: exact, Monte Carlo with truncation and
//! a stopping rule, and distances between reward vectors.
//!
//! Coalitions are bitmasks over at most 64 players (bit `i` is player `i`).

mod games;

use std::collections::HashMap;
use std::sync::RwLock;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{Domain, Streams};

pub use games::{FnGame, MajorityVoteGame, TabularGame, MAX_TABULAR_PLAYERS};

/// Largest game solved exactly.
pub const MAX_EXACT_PLAYERS: usize = 12;

/// Largest game a bitmask can address.
pub const MAX_PLAYERS: usize = 63;

pub trait CoalitionOracle: Sync {
    fn players(&self) -> usize;
    fn value(&self, coalition: u64) -> f64;

    fn grand_coalition(&self) -> u64 {
        (1u64 << self.players()) - 1
    }
}

/// Caches oracle values; `evaluations` counts distinct coalitions asked for.
pub struct Memoized<'a, O: ?Sized> {
    inner: &'a O,
    cache: RwLock<HashMap<u64, f64>>,
}

impl<'a, O: CoalitionOracle + ?Sized> Memoized<'a, O> {
    pub fn new(inner: &'a O) -> Self {
        Self {
            inner,
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn evaluations(&self) -> usize {
        self.cache.read().expect("cache lock").len()
    }
}

impl<O: CoalitionOracle + ?Sized> CoalitionOracle for Memoized<'_, O> {
    fn players(&self) -> usize {
        self.inner.players()
    }

    fn value(&self, coalition: u64) -> f64 {
        if let Some(&v) = self.cache.read().expect("cache lock").get(&coalition) {
            return v;
        }
        let v = self.inner.value(coalition);
        self.cache.write().expect("cache lock").insert(coalition, v);
        v
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapleyResult {
    pub values: Vec<f64>,
    pub evaluations_used: usize,
    /// Always true for the exact solver.
    pub converged: bool,
    /// Sampled permutations; 0 for the exact solver.
    pub permutations_used: usize,
}

fn check_players(n: usize, max: usize) -> Result<()> {
    if n == 0 || n > max {
        return Err(Error::TooManyClients { clients: n, max });
    }
    Ok(())
}

/// `s! (n - s - 1)! / n!` for `s = 0..n`.
fn subset_weights(n: usize) -> Vec<f64> {
    // w(0) = 1/n, w(s + 1) = w(s) * (s + 1) / (n - s - 1)
    let mut w = vec![1.0 / n as f64; n];
    for s in 0..n - 1 {
        w[s + 1] = w[s] * (s + 1) as f64 / (n - s - 1) as f64;
    }
    w
}

/// Exact values from the subset-weighted form over all `2^n` coalitions.
pub fn exact_shapley<O: CoalitionOracle + ?Sized>(oracle: &O) -> Result<ShapleyResult> {
    let n = oracle.players();
    check_players(n, MAX_EXACT_PLAYERS)?;
    let size = 1usize << n;
    let v: Vec<f64> = (0..size as u64).into_par_iter().map(|s| oracle.value(s)).collect();
    let w = subset_weights(n);
    let values = (0..n)
        .map(|i| {
            let bit = 1usize << i;
            (0..size)
                .filter(|s| s & bit == 0)
                .map(|s| w[s.count_ones() as usize] * (v[s | bit] - v[s]))
                .sum()
        })
        .collect();
    Ok(ShapleyResult {
        values,
        evaluations_used: size,
        converged: true,
        permutations_used: 0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoppingRule {
    pub window: usize,
    pub tol: f64,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self { window: 10, tol: 0.05 }
    }
}

impl StoppingRule {
    /// Mean relative change of the current estimate against each of the
    /// last `window` snapshots. Coordinates with `|phi| < 1e-9` are skipped
    /// and the divisor shrinks with them.
    pub fn criterion(&self, current: &[f64], previous: &[Vec<f64>]) -> f64 {
        let mut total = 0.0;
        let mut terms = 0usize;
        for past in previous {
            for (now, before) in current.iter().zip(past) {
                if now.abs() < 1e-9 {
                    continue;
                }
                total += (now - before).abs() / now.abs();
                terms += 1;
            }
        }
        if terms == 0 {
            0.0
        } else {
            total / terms as f64
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub max_permutations: usize,
    /// Once `|v(N) - v(S)|` falls to this, later marginals in the
    /// permutation are zero. `None` disables truncation.
    pub truncation_eps: Option<f64>,
    pub stopping: Option<StoppingRule>,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            max_permutations: 1000,
            truncation_eps: None,
            stopping: Some(StoppingRule::default()),
        }
    }
}

impl McConfig {
    /// Truncation threshold as a fraction of `|v(N) - v(empty)|`.
    pub fn relative_truncation<O: CoalitionOracle + ?Sized>(mut self, oracle: &O, fraction: f64) -> Self {
        let range = (oracle.value(oracle.grand_coalition()) - oracle.value(0)).abs();
        self.truncation_eps = Some(fraction * range);
        self
    }
}

/// Permutations evaluated together; the estimate is still folded and checked
/// one permutation at a time.
const BATCH: usize = 16;

fn permutation_marginals<O: CoalitionOracle + ?Sized>(
    oracle: &O,
    order: &[usize],
    v_empty: f64,
    v_full: f64,
    eps: Option<f64>,
) -> Vec<f64> {
    let mut out = vec![0.0; order.len()];
    let mut coalition = 0u64;
    let mut prev = v_empty;
    for (pos, &p) in order.iter().enumerate() {
        if pos > 0 && eps.is_some_and(|e| (v_full - prev).abs() <= e) {
            break;
        }
        coalition |= 1 << p;
        let v = oracle.value(coalition);
        out[p] = v - prev;
        prev = v;
    }
    out
}

/// Permutation-sampling estimate. Permutation `h` is shuffled from its own
/// keyed stream, so results don't depend on the thread count.
pub fn mc_shapley<O: CoalitionOracle + ?Sized>(oracle: &O, cfg: &McConfig, streams: &Streams) -> Result<ShapleyResult> {
    let n = oracle.players();
    check_players(n, MAX_PLAYERS)?;
    if cfg.max_permutations == 0 {
        return Err(Error::Config("max_permutations must be at least 1".into()));
    }
    let memo = Memoized::new(oracle);
    let v_empty = memo.value(0);
    let v_full = memo.value(memo.grand_coalition());
    let mut sum = vec![0.0; n];
    let mut snapshots: Vec<Vec<f64>> = Vec::new();
    let mut used = 0;
    let mut converged = false;
    'outer: while used < cfg.max_permutations {
        let batch = BATCH.min(cfg.max_permutations - used);
        let marginals: Vec<Vec<f64>> = (used..used + batch)
            .into_par_iter()
            .map(|h| {
                let mut order: Vec<usize> = (0..n).collect();
                order.shuffle(&mut streams.stream(Domain::Shapley, &[h as u64]));
                permutation_marginals(&memo, &order, v_empty, v_full, cfg.truncation_eps)
            })
            .collect();
        for m in marginals {
            used += 1;
            for (s, x) in sum.iter_mut().zip(&m) {
                *s += x;
            }
            let estimate: Vec<f64> = sum.iter().map(|s| s / used as f64).collect();
            if let Some(rule) = cfg.stopping {
                if used > rule.window {
                    let recent = &snapshots[snapshots.len() - rule.window..];
                    if rule.criterion(&estimate, recent) < rule.tol {
                        snapshots.push(estimate);
                        converged = true;
                        break 'outer;
                    }
                }
            }
            snapshots.push(estimate);
        }
    }
    Ok(ShapleyResult {
        values: snapshots.pop().expect("at least one permutation"),
        evaluations_used: memo.evaluations(),
        converged,
        permutations_used: used,
    })
}

/// Clamps negatives to zero and rescales to sum 1.
pub fn normalize_rewards(q: &[f64]) -> Result<Vec<f64>> {
    let clamped: Vec<f64> = q.iter().map(|&x| x.max(0.0)).collect();
    let sum: f64 = clamped.iter().sum();
    if sum <= 0.0 || !sum.is_finite() {
        return Err(Error::DegenerateRewards);
    }
    Ok(clamped.into_iter().map(|x| x / sum).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distances {
    /// `1 - cos(exact, candidate)`.
    pub cosine: f64,
    pub euclidean: f64,
    pub max_diff: f64,
}

/// Compares two reward vectors after normalizing both.
pub fn distance_metrics(exact: &[f64], candidate: &[f64]) -> Result<Distances> {
    if exact.len() != candidate.len() {
        return Err(Error::LengthMismatch {
            left: exact.len(),
            right: candidate.len(),
        });
    }
    if exact.iter().all(|&x| x == 0.0) || candidate.iter().all(|&x| x == 0.0) {
        return Err(Error::ZeroVector);
    }
    let p = normalize_rewards(exact)?;
    let q = normalize_rewards(candidate)?;
    let dot: f64 = p.iter().zip(&q).map(|(a, b)| a * b).sum();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let cosine = 1.0 - dot / (norm(&p) * norm(&q));
    let euclidean = p.iter().zip(&q).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let max_diff = p.iter().zip(&q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(Distances {
        cosine: cosine.max(0.0),
        euclidean,
        max_diff,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapleyRow {
    pub client: usize,
    pub phi_exact: f64,
    pub phi_mc: f64,
    pub evaluations: usize,
}

/// Per-client comparison table; `evaluations` is the estimator's count.
pub fn shapley_csv(exact: &ShapleyResult, mc: &ShapleyResult) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (client, (e, m)) in exact.values.iter().zip(&mc.values).enumerate() {
        w.serialize(ShapleyRow {
            client,
            phi_exact: *e,
            phi_mc: *m,
            evaluations: mc.evaluations_used,
        })?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Average of marginals over all `n!` orders.
    fn brute_force(oracle: &dyn CoalitionOracle) -> Vec<f64> {
        fn permute(prefix: &mut Vec<usize>, rest: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if rest.is_empty() {
                out.push(prefix.clone());
            }
            for i in 0..rest.len() {
                let p = rest.remove(i);
                prefix.push(p);
                permute(prefix, rest, out);
                prefix.pop();
                rest.insert(i, p);
            }
        }
        let n = oracle.players();
        let mut perms = Vec::new();
        permute(&mut Vec::new(), &mut (0..n).collect(), &mut perms);
        let mut phi = vec![0.0; n];
        for order in &perms {
            let mut s = 0u64;
            for &p in order {
                let before = oracle.value(s);
                s |= 1 << p;
                phi[p] += oracle.value(s) - before;
            }
        }
        phi.iter().map(|x| x / perms.len() as f64).collect()
    }

    #[test]
    fn worked_game() {
        let g = TabularGame::worked_example();
        let r = exact_shapley(&g).unwrap();
        let expect = [0.243_333_333_333_333_3, 0.293_333_333_333_333_3, 0.343_333_333_333_333_3];
        for (a, b) in r.values.iter().zip(expect) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!((r.values.iter().sum::<f64>() - 0.88).abs() < 1e-12);
        assert_eq!(r.evaluations_used, 8);
        let bf = brute_force(&g);
        for (a, b) in r.values.iter().zip(&bf) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn additive_and_null_players() {
        let w = [0.3, -0.2, 0.9, 0.0];
        let g = FnGame::new(4, |s| (0..4).filter(|i| s >> i & 1 == 1).map(|i| w[i]).sum());
        let r = exact_shapley(&g).unwrap();
        for (a, b) in r.values.iter().zip(w) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(r.values[3].abs() < 1e-12, true);
    }

    #[test]
    fn too_many_players() {
        let g = FnGame::new(13, |_| 0.0);
        assert_eq!(exact_shapley(&g), Err(Error::TooManyClients { clients: 13, max: 12 }));
    }

    #[test]
    fn additive_game_stops_at_first_check() {
        let g = FnGame::new(5, |s| s.count_ones() as f64 * 0.1 + (s & 1) as f64);
        let r = mc_shapley(&g, &McConfig::default(), &Streams::new(3)).unwrap();
        assert!(r.converged);
        assert_eq!(r.permutations_used, 11);
    }

    #[test]
    fn infinite_truncation_breaks_efficiency() {
        let g = TabularGame::worked_example();
        let cfg = McConfig {
            max_permutations: 300,
            truncation_eps: Some(f64::INFINITY),
            stopping: None,
        };
        let r = mc_shapley(&g, &cfg, &Streams::new(1)).unwrap();
        assert!((r.values.iter().sum::<f64>() - 0.88).abs() > 0.1);
        assert!(!r.converged);
        assert_eq!(r.permutations_used, 300);
    }

    #[test]
    fn mc_is_reproducible() {
        let g = TabularGame::worked_example();
        let cfg = McConfig { max_permutations: 100, truncation_eps: None, stopping: None };
        let a = mc_shapley(&g, &cfg, &Streams::new(5)).unwrap();
        let b = mc_shapley(&g, &cfg, &Streams::new(5)).unwrap();
        assert_eq!(a, b);
        assert!(a.evaluations_used <= 8);
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_rewards(&[2.0, 3.0, 5.0]).unwrap(), vec![0.2, 0.3, 0.5]);
        assert_eq!(normalize_rewards(&[0.32, 0.32, -0.32]).unwrap(), vec![0.5, 0.5, 0.0]);
        assert_eq!(normalize_rewards(&[0.0; 3]), Err(Error::DegenerateRewards));
    }

    #[test]
    fn distances() {
        let d = distance_metrics(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((d.cosine - 1.0).abs() < 1e-15);
        assert!((d.euclidean - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(d.max_diff, 1.0);
        let x = [0.2, 0.5, 0.3];
        assert_eq!(distance_metrics(&x, &x).unwrap(), Distances { cosine: 0.0, euclidean: 0.0, max_diff: 0.0 });
        let d = distance_metrics(&x, &[0.4, 1.0, 0.6]).unwrap();
        assert!(d.cosine < 1e-15 && d.euclidean < 1e-15 && d.max_diff < 1e-15);
        assert_eq!(distance_metrics(&x, &[0.0; 3]), Err(Error::ZeroVector));
        assert!(matches!(distance_metrics(&x, &[1.0]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn csv_columns() {
        let g = TabularGame::worked_example();
        let e = exact_shapley(&g).unwrap();
        let csv = shapley_csv(&e, &e).unwrap();
        assert!(csv.starts_with("client,phi_exact,phi_mc,evaluations\n0,"));
        assert_eq!(csv.lines().count(), 4);
    }

    fn random_game(n: usize, seed: u64) -> TabularGame {
        use rand::Rng;
        let mut rng = Streams::new(seed).stream(Domain::Trial, &[]);
        TabularGame::new(n, (0..1u64 << n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn subset_form_matches_permutations(n in 1usize..=6, seed in any::<u64>()) {
            let g = random_game(n, seed);
            let r = exact_shapley(&g).unwrap();
            let bf = brute_force(&g);
            for (a, b) in r.values.iter().zip(&bf) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            let total = g.value(g.grand_coalition()) - g.value(0);
            prop_assert!((r.values.iter().sum::<f64>() - total).abs() < 1e-9);
        }

        #[test]
        fn symmetric_players_share_equally(n in 2usize..=8, seed in any::<u64>()) {
            // value depends on coalition size and on player 0 only
            let g0 = random_game(1, seed);
            let bump = g0.value(1);
            let g = FnGame::new(n, move |s| (s.count_ones() as f64).sqrt() + bump * (s & 1) as f64);
            let r = exact_shapley(&g).unwrap();
            for i in 2..n {
                prop_assert!((r.values[i] - r.values[1]).abs() < 1e-9);
            }
        }

        #[test]
        fn additivity(n in 1usize..=6, s1 in any::<u64>(), s2 in any::<u64>()) {
            let (a, b) = (random_game(n, s1), random_game(n, s2));
            let sum = FnGame::new(n, |s| a.value(s) + b.value(s));
            let (ra, rb, rs) = (exact_shapley(&a).unwrap(), exact_shapley(&b).unwrap(), exact_shapley(&sum).unwrap());
            for i in 0..n {
                prop_assert!((ra.values[i] + rb.values[i] - rs.values[i]).abs() < 1e-12);
            }
        }

        #[test]
        fn null_player(n in 2usize..=6, seed in any::<u64>(), null in 0usize..6) {
            let null = null % n;
            let base = random_game(n, seed);
            let g = FnGame::new(n, |s| base.value(s & !(1 << null)));
            prop_assert!(exact_shapley(&g).unwrap().values[null].abs() < 1e-12);
        }
    }
}
