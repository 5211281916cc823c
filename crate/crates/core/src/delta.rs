//! Delta matrices: joint report probability minus the product of marginals.
//!
//! Row and column sums of a delta matrix are zero for the analytic and
//! empirical constructions. The regularized transform breaks that centering,
//! so its provenance waives the invariant.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::world::{Label, LabelSpace, SignalWorld};

/// Zero-marginal tolerance for analytic deltas.
pub const ANALYTIC_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Provenance {
    Analytic,
    Empirical { tasks: usize },
    Regularized { gamma: f64 },
    /// Supplied by a caller or a file.
    Provided,
}

impl Provenance {
    pub fn zero_marginals(&self) -> bool {
        !matches!(self, Provenance::Regularized { .. })
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Analytic => write!(f, "analytic"),
            Self::Empirical { tasks } => write!(f, "empirical:m={tasks}"),
            Self::Regularized { gamma } => write!(f, "regularized:gamma={gamma}"),
            Self::Provided => write!(f, "provided"),
        }
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Format(format!("unknown provenance {s:?}"));
        match s {
            "analytic" => return Ok(Self::Analytic),
            "provided" => return Ok(Self::Provided),
            _ => {}
        }
        if let Some(m) = s.strip_prefix("empirical:m=") {
            return Ok(Self::Empirical {
                tasks: m.parse().map_err(|_| bad())?,
            });
        }
        if let Some(g) = s.strip_prefix("regularized:gamma=") {
            let gamma: f64 = g.parse().map_err(|_| bad())?;
            if !(gamma > 0.0 && gamma < 1.0) {
                return Err(Error::InvalidGamma(gamma));
            }
            return Ok(Self::Regularized { gamma });
        }
        Err(bad())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DeltaFile", into = "DeltaFile")]
pub struct DeltaMatrix {
    labels: LabelSpace,
    entries: Vec<f64>,
    provenance: Provenance,
}

/// JSON shape: `{ "L": int, "provenance": string, "entries": row-major array }`.
/// `entries` may also be given as nested rows when reading.
#[derive(Serialize, Deserialize)]
struct DeltaFile {
    #[serde(rename = "L")]
    labels: usize,
    provenance: String,
    entries: Entries,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Entries {
    Flat(Vec<f64>),
    Nested(Vec<Vec<f64>>),
}

impl TryFrom<DeltaFile> for DeltaMatrix {
    type Error = Error;

    fn try_from(f: DeltaFile) -> Result<Self> {
        let labels = LabelSpace::new(f.labels)?;
        let entries = match f.entries {
            Entries::Flat(v) => v,
            Entries::Nested(rows) => {
                if rows.iter().any(|r| r.len() != f.labels) {
                    return Err(Error::Format("nested delta rows must have length L".into()));
                }
                rows.concat()
            }
        };
        Self::new(labels, entries, f.provenance.parse()?)
    }
}

impl From<DeltaMatrix> for DeltaFile {
    fn from(d: DeltaMatrix) -> Self {
        DeltaFile {
            labels: d.labels.size(),
            provenance: d.provenance.to_string(),
            entries: Entries::Flat(d.entries),
        }
    }
}

impl DeltaMatrix {
    /// Validates shape and range; entries must lie in `[-1, 1]`.
    pub fn new(labels: LabelSpace, entries: Vec<f64>, provenance: Provenance) -> Result<Self> {
        let l = labels.size();
        if entries.len() != l * l {
            return Err(Error::DimensionMismatch {
                what: "delta entries".into(),
                expected: l * l,
                got: entries.len(),
            });
        }
        if let Some(x) = entries.iter().find(|x| !x.is_finite() || x.abs() > 1.0) {
            return Err(Error::Format(format!("delta entry {x} outside [-1, 1]")));
        }
        Ok(Self {
            labels,
            entries,
            provenance,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let labels = LabelSpace::new(rows.len())?;
        if rows.iter().any(|r| r.len() != rows.len()) {
            return Err(Error::Format("delta matrix must be square".into()));
        }
        Self::new(labels, rows.concat(), Provenance::Provided)
    }

    pub fn zeros(labels: LabelSpace) -> Self {
        let l = labels.size();
        Self {
            labels,
            entries: vec![0.0; l * l],
            provenance: Provenance::Provided,
        }
    }

    pub fn labels(&self) -> LabelSpace {
        self.labels
    }

    pub fn size(&self) -> usize {
        self.labels.size()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.entries[a * self.size() + b]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.size()).map(<[f64]>::to_vec).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.entries.chunks(self.size()).map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let l = self.size();
        (0..l).map(|b| (0..l).map(|a| self.get(a, b)).sum()).collect()
    }

    /// Largest absolute row or column sum.
    pub fn marginal_error(&self) -> f64 {
        self.row_sums()
            .into_iter()
            .chain(self.col_sums())
            .map(f64::abs)
            .fold(0.0, f64::max)
    }

    pub fn diagonal_sum(&self) -> f64 {
        (0..self.size()).map(|a| self.get(a, a)).sum()
    }

    pub fn transpose(&self) -> Self {
        let l = self.size();
        Self {
            labels: self.labels,
            entries: (0..l * l).map(|i| self.get(i % l, i / l)).collect(),
            provenance: self.provenance,
        }
    }

    /// Entrywise `c * delta`, keeping provenance. Callers keep `|c| <= 1`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            labels: self.labels,
            entries: self.entries.iter().map(|x| c * x).collect(),
            provenance: self.provenance,
        }
    }

    pub fn max_abs_diff(&self, other: &DeltaMatrix) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Delta between two clients' signals under full effort:
/// `sum_y pi(y) P_i(a|y) P_j(b|y) - P(Z_i = a) P(Z_j = b)`.
pub fn analytic_delta(world: &SignalWorld, i: usize, j: usize) -> Result<DeltaMatrix> {
    let pi = &world.client_checked(i)?.channel;
    let pj = &world.client_checked(j)?.channel;
    let prior = world.prior();
    let l = world.labels().size();
    let marginal = |p: &crate::matrix::Matrix, a: usize| -> f64 {
        (0..l).map(|y| prior[y] * p.get(y, a)).sum()
    };
    let mi: Vec<f64> = (0..l).map(|a| marginal(pi, a)).collect();
    let mj: Vec<f64> = (0..l).map(|b| marginal(pj, b)).collect();
    let mut entries = Vec::with_capacity(l * l);
    for a in 0..l {
        for b in 0..l {
            let joint: f64 = (0..l).map(|y| prior[y] * pi.get(y, a) * pj.get(y, b)).sum();
            entries.push(joint - mi[a] * mj[b]);
        }
    }
    DeltaMatrix::new(world.labels(), entries, Provenance::Analytic)
}

/// Delta estimated from paired reports. Counts are exact integers and each
/// entry is `(m * c_ab - c_a * c_b) / m^2`, so the numerators of every row and
/// column sum to exactly zero.
pub fn empirical_delta(reports_i: &[Label], reports_j: &[Label], labels: LabelSpace) -> Result<DeltaMatrix> {
    if reports_i.len() != reports_j.len() {
        return Err(Error::LengthMismatch {
            left: reports_i.len(),
            right: reports_j.len(),
        });
    }
    let m = reports_i.len();
    if m == 0 {
        return Err(Error::Format("empirical delta needs at least one task".into()));
    }
    let l = labels.size();
    let mut joint = vec![0u64; l * l];
    let mut ci = vec![0u64; l];
    let mut cj = vec![0u64; l];
    for (&a, &b) in reports_i.iter().zip(reports_j) {
        let (a, b) = (a as usize, b as usize);
        labels.check(a)?;
        labels.check(b)?;
        joint[a * l + b] += 1;
        ci[a] += 1;
        cj[b] += 1;
    }
    let m_i = m as i128;
    let denom = (m as f64) * (m as f64);
    let entries = (0..l * l)
        .map(|idx| {
            let (a, b) = (idx / l, idx % l);
            let num = m_i * joint[idx] as i128 - ci[a] as i128 * cj[b] as i128;
            num as f64 / denom
        })
        .collect();
    DeltaMatrix::new(labels, entries, Provenance::Empirical { tasks: m })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoricalVerdict {
    pub holds: bool,
    pub min_diagonal: f64,
    pub max_offdiagonal: f64,
    pub violating_entries: Vec<(usize, usize)>,
}

/// Checks `delta(a, a) > 0` and `delta(a, b) < 0` for `a != b`.
pub fn check_categorical(delta: &DeltaMatrix) -> CategoricalVerdict {
    let l = delta.size();
    let mut min_diagonal = f64::INFINITY;
    let mut max_offdiagonal = f64::NEG_INFINITY;
    let mut violating_entries = Vec::new();
    for a in 0..l {
        for b in 0..l {
            let x = delta.get(a, b);
            if a == b {
                min_diagonal = min_diagonal.min(x);
                if x <= 0.0 {
                    violating_entries.push((a, b));
                }
            } else {
                max_offdiagonal = max_offdiagonal.max(x);
                if x >= 0.0 {
                    violating_entries.push((a, b));
                }
            }
        }
    }
    CategoricalVerdict {
        holds: violating_entries.is_empty(),
        min_diagonal,
        max_offdiagonal,
        violating_entries,
    }
}

/// Delta under partial effort: every entry scales by `eta_1 * eta_2`.
pub fn shirk_scale(delta_full: &DeltaMatrix, eta_1: f64, eta_2: f64) -> Result<DeltaMatrix> {
    for eta in [eta_1, eta_2] {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidEffort(eta));
        }
    }
    Ok(delta_full.scaled(eta_1 * eta_2))
}

/// Sign-preserving power transform `sign(x) |x|^gamma`. Not re-centered.
pub fn regularize(delta: &DeltaMatrix, gamma: f64) -> Result<DeltaMatrix> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidGamma(gamma));
    }
    let entries = delta
        .entries
        .iter()
        .map(|&x| if x == 0.0 { 0.0 } else { x.signum() * x.abs().powf(gamma) })
        .collect();
    DeltaMatrix::new(delta.labels, entries, Provenance::Regularized { gamma })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{ClientChannel, SignalWorld};
    use proptest::prelude::*;

    fn rows(d: &DeltaMatrix) -> Vec<Vec<f64>> {
        d.to_rows()
    }

    #[test]
    fn identity_channels_binary() {
        let w = SignalWorld::binary_symmetric(&[0.0, 0.0]).unwrap();
        let d = analytic_delta(&w, 0, 1).unwrap();
        assert_eq!(rows(&d), vec![vec![0.25, -0.25], vec![-0.25, 0.25]]);
    }

    #[test]
    fn uninformative_channel_gives_zero() {
        let l = LabelSpace::binary();
        let flat = ClientChannel {
            channel: crate::matrix::Matrix::from_fn(2, 2, |_, a| [0.3, 0.7][a]),
            baseline: vec![0.3, 0.7],
            effort: 1.0,
            informative: false,
        };
        let w = SignalWorld::new(l, vec![0.4, 0.6], vec![ClientChannel::symmetric(l, 0.1), flat]).unwrap();
        let d = analytic_delta(&w, 0, 1).unwrap();
        assert!(d.entries().iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn binary_symmetric_closed_form() {
        let w = SignalWorld::binary_symmetric(&[0.1, 0.1]).unwrap();
        let d = analytic_delta(&w, 0, 1).unwrap();
        // 0.25 (1 - 2 alpha)^2
        assert!((d.get(0, 0) - 0.16).abs() < 1e-15);
        assert!((d.get(0, 1) + 0.16).abs() < 1e-15);
    }

    #[test]
    fn flip_example() {
        let d = empirical_delta(&[1, 0, 1, 0, 1, 0], &[0, 1, 0, 1, 0, 1], LabelSpace::binary()).unwrap();
        assert_eq!(rows(&d), vec![vec![-0.25, 0.25], vec![0.25, -0.25]]);
        let v = check_categorical(&d);
        assert!(!v.holds);
        assert_eq!(v.violating_entries.len(), 4);
    }

    #[test]
    fn identical_uniform_reports() {
        let r = [0, 1, 0, 1, 1, 0];
        let d = empirical_delta(&r, &r, LabelSpace::binary()).unwrap();
        assert_eq!(rows(&d), vec![vec![0.25, -0.25], vec![-0.25, 0.25]]);
        assert!(check_categorical(&d).holds);
    }

    #[test]
    fn constant_reports_give_zero() {
        let d = empirical_delta(&[0, 1, 2, 1], &[2, 2, 2, 2], LabelSpace::new(3).unwrap()).unwrap();
        assert!(d.entries().iter().all(|&x| x == 0.0));
        assert!(!check_categorical(&d).holds);
    }

    #[test]
    fn length_mismatch() {
        assert_eq!(
            empirical_delta(&[0, 1], &[0], LabelSpace::binary()),
            Err(Error::LengthMismatch { left: 2, right: 1 })
        );
    }

    #[test]
    fn shirking_scales() {
        let d = DeltaMatrix::from_rows(&[vec![0.25, -0.25], vec![-0.25, 0.25]]).unwrap();
        assert_eq!(shirk_scale(&d, 1.0, 1.0).unwrap(), d);
        assert!(shirk_scale(&d, 0.0, 0.7).unwrap().entries().iter().all(|&x| x == 0.0));
        assert_eq!(shirk_scale(&d, 0.5, 0.5).unwrap().get(0, 0), 0.0625);
        assert!(shirk_scale(&d, 1.5, 0.5).is_err());
    }

    #[test]
    fn regularize_values() {
        let d = DeltaMatrix::from_rows(&[vec![0.04, -0.04], vec![0.0, 0.0]]).unwrap();
        let r = regularize(&d, 0.5).unwrap();
        assert!((r.get(0, 0) - 0.2).abs() < 1e-15);
        assert!((r.get(0, 1) + 0.2).abs() < 1e-15);
        assert_eq!(r.get(1, 0), 0.0);
        assert!(!r.provenance().zero_marginals());
        assert_eq!(regularize(&d, 1.0), Err(Error::InvalidGamma(1.0)));
        assert_eq!(regularize(&d, 0.0), Err(Error::InvalidGamma(0.0)));
    }

    #[test]
    fn json_shape() {
        let d = empirical_delta(&[1, 0, 1, 0, 1, 0], &[0, 1, 0, 1, 0, 1], LabelSpace::binary()).unwrap();
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(s, r#"{"L":2,"provenance":"empirical:m=6","entries":[-0.25,0.25,0.25,-0.25]}"#);
        let back: DeltaMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
        let nested: DeltaMatrix =
            serde_json::from_str(r#"{"L":2,"provenance":"provided","entries":[[0.1,-0.1],[-0.1,0.1]]}"#).unwrap();
        assert_eq!(nested.get(1, 0), -0.1);
        assert!(serde_json::from_str::<DeltaMatrix>(r#"{"L":2,"provenance":"provided","entries":[1,2,3]}"#).is_err());
    }

    #[test]
    fn verdict_on_zero_matrix() {
        let v = check_categorical(&DeltaMatrix::zeros(LabelSpace::binary()));
        assert!(!v.holds);
        assert_eq!(v.min_diagonal, 0.0);
    }

    fn arb_channel(l: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(0.01f64..1.0, l), l).prop_map(|rows| {
            rows.into_iter()
                .map(|r| {
                    let s: f64 = r.iter().sum();
                    let mut r: Vec<f64> = r.iter().map(|x| x / s).collect();
                    // force exact unit sum on the last entry
                    let head: f64 = r[..r.len() - 1].iter().sum();
                    *r.last_mut().unwrap() = 1.0 - head;
                    r
                })
                .collect()
        })
    }

    fn world_from(l: usize, c1: Vec<Vec<f64>>, c2: Vec<Vec<f64>>) -> SignalWorld {
        let labels = LabelSpace::new(l).unwrap();
        let mk = |rows: Vec<Vec<f64>>| ClientChannel {
            channel: crate::matrix::Matrix::from_rows(&rows).unwrap(),
            baseline: labels.uniform(),
            effort: 1.0,
            informative: false,
        };
        SignalWorld::new(labels, labels.uniform(), vec![mk(c1), mk(c2)]).unwrap()
    }

    proptest! {
        #[test]
        fn analytic_invariants((l, c1, c2) in (2usize..5).prop_flat_map(|l| (Just(l), arb_channel(l), arb_channel(l)))) {
            let w = world_from(l, c1, c2);
            let d = analytic_delta(&w, 0, 1).unwrap();
            prop_assert!(d.marginal_error() < ANALYTIC_TOL);
            let dt = analytic_delta(&w, 1, 0).unwrap();
            prop_assert!(d.max_abs_diff(&dt.transpose()) < 1e-15);
            // covariance form over Y ~ prior
            let prior = w.prior();
            for a in 0..l {
                for b in 0..l {
                    let f: Vec<f64> = (0..l).map(|y| w.client(0).channel.get(y, a)).collect();
                    let g: Vec<f64> = (0..l).map(|y| w.client(1).channel.get(y, b)).collect();
                    let ef: f64 = (0..l).map(|y| prior[y] * f[y]).sum();
                    let eg: f64 = (0..l).map(|y| prior[y] * g[y]).sum();
                    let cov: f64 = (0..l).map(|y| prior[y] * (f[y] - ef) * (g[y] - eg)).sum();
                    prop_assert!((d.get(a, b) - cov).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn empirical_marginals_vanish(l in 2usize..6, seed in any::<u64>(), m in 1usize..400) {
            let mut s = seed;
            let mut next = || { s = s.wrapping_mul(6364136223846793005).wrapping_add(1); ((s >> 33) as usize % l) as Label };
            let ri: Vec<Label> = (0..m).map(|_| next()).collect();
            let rj: Vec<Label> = (0..m).map(|_| next()).collect();
            let d = empirical_delta(&ri, &rj, LabelSpace::new(l).unwrap()).unwrap();
            prop_assert!(d.marginal_error() < 1e-12);
        }

        #[test]
        fn regularize_preserves_signs(v in prop::collection::vec(-1.0f64..1.0, 9), gamma in 0.01f64..0.99) {
            let d = DeltaMatrix::new(LabelSpace::new(3).unwrap(), v, Provenance::Provided).unwrap();
            let r = regularize(&d, gamma).unwrap();
            for (x, y) in d.entries().iter().zip(r.entries()) {
                prop_assert_eq!(x.partial_cmp(&0.0), y.partial_cmp(&0.0));
            }
        }

        #[test]
        fn binary_condition_iff_both_better_than_random(a1 in 0.0f64..1.0, a2 in 0.0f64..1.0) {
            let w = SignalWorld::binary_symmetric(&[a1, a2]).unwrap();
            let holds = check_categorical(&analytic_delta(&w, 0, 1).unwrap()).holds;
            // the sign of (1 - 2 a1)(1 - 2 a2) decides; both below 1/2 is the
            // honest regime, both above 1/2 is two systematic flippers
            prop_assert_eq!(holds, (1.0 - 2.0 * a1) * (1.0 - 2.0 * a2) > 0.0);
            if a1 < 0.5 && a2 < 0.5 { prop_assert!(holds); }
            if a1 >= 0.5 && a2 < 0.5 { prop_assert!(!holds); }
        }
    }
}
