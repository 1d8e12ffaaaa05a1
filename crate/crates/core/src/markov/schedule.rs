//! Piecewise-constant transition schedules and the measures they generate.
//!
//! Coordinate j moves to j + 1 with matrix P_j, so the marginals obey
//! π_{j+1} = π_j P_j and a cylinder [b]_k^l has mass π_k(b_k) Π_{j=k}^{l−1} P_j(b_j, b_{j+1}).

use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::{golden_matrix, golden_stationary, perturbed_matrix, ProbVector, StochasticMatrix};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::tms::{symbols_admissible, AdjacencyMatrix, Cylinder};

/// Which matrix governs a transition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MatrixId {
    Base,
    Level(usize),
}

/// One level of the schedule: Q_λ on [start, mid), Q on [mid, end).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockLevel {
    pub lambda: f64,
    #[serde(with = "crate::decimal")]
    pub start: BigInt,
    #[serde(with = "crate::decimal")]
    pub mid: BigInt,
    #[serde(with = "crate::decimal")]
    pub end: BigInt,
}

/// How the perturbation continues past the explicitly built levels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailRule {
    /// Later levels obey the finite-approximation bound 2·m_eff·ln λ_l < 2^{−l},
    /// with m_eff = min(m_{l−1}, cap).
    Construction { approximation_cap: Option<u64> },
    /// The last λ repeats at every later level.
    Constant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockSchedule {
    levels: Vec<BlockLevel>,
}

/// A maximal run of positions `start .. start + len` sharing one matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    pub id: MatrixId,
    pub start: BigInt,
    pub len: BigUint,
}

impl BlockSchedule {
    pub fn new(levels: Vec<BlockLevel>) -> Result<Self> {
        for (i, lv) in levels.iter().enumerate() {
            if !(lv.lambda >= 1.0) {
                return Err(Error::Input(format!("level {} has λ < 1", i + 1)));
            }
            if !(lv.start < lv.mid && lv.mid < lv.end) {
                return Err(Error::Input(format!("level {} boundaries are not strictly increasing", i + 1)));
            }
            if i == 0 && lv.start < BigInt::one() {
                return Err(Error::Input("the first perturbed block must start at a positive index".into()));
            }
            if i > 0 && lv.start != levels[i - 1].end {
                return Err(Error::Input(format!("level {} does not start where level {} ends", i + 1, i)));
            }
        }
        Ok(Self { levels })
    }

    pub fn constant() -> Self {
        Self { levels: Vec::new() }
    }

    pub fn levels(&self) -> &[BlockLevel] {
        &self.levels
    }

    pub fn matrix_at(&self, j: &BigInt) -> MatrixId {
        for (i, lv) in self.levels.iter().enumerate() {
            if *j >= lv.start && *j < lv.mid {
                return MatrixId::Level(i + 1);
            }
        }
        MatrixId::Base
    }

    /// Sorted, de-duplicated list of all block boundaries.
    pub fn boundaries(&self) -> Vec<BigInt> {
        let mut b: Vec<BigInt> = self.levels.iter().flat_map(|l| [l.start.clone(), l.mid.clone(), l.end.clone()]).collect();
        b.dedup();
        b
    }

    /// Perturbed blocks `[start, mid)` paired with their level number.
    pub fn perturbed_blocks(&self) -> impl Iterator<Item = (usize, &BlockLevel)> {
        self.levels.iter().enumerate().map(|(i, l)| (i + 1, l))
    }

    /// Sorted, merged half-open intervals of positions k where P_{k−n} may
    /// differ from P_k: the perturbed blocks and their translates by n.
    pub fn contributing_intervals(&self, n: &BigInt) -> Vec<(BigInt, BigInt)> {
        let mut iv: Vec<(BigInt, BigInt)> = Vec::new();
        if n.is_zero() {
            return iv;
        }
        for l in &self.levels {
            iv.push((l.start.clone(), l.mid.clone()));
            iv.push((&l.start + n, &l.mid + n));
        }
        iv.sort();
        let mut merged: Vec<(BigInt, BigInt)> = Vec::new();
        for (a, b) in iv {
            match merged.last_mut() {
                Some((_, e)) if a <= *e => {
                    if b > *e {
                        *e = b;
                    }
                }
                _ => merged.push((a, b)),
            }
        }
        merged
    }

    /// Constant runs covering positions `from .. to`.
    pub fn segments(&self, from: &BigInt, to: &BigInt) -> Vec<Segment> {
        let mut out = Vec::new();
        if from >= to {
            return out;
        }
        let mut cut: Vec<BigInt> = self.boundaries().into_iter().filter(|b| b > from && b < to).collect();
        cut.push(to.clone());
        let mut cur = from.clone();
        for c in cut {
            let id = self.matrix_at(&cur);
            let len = (&c - &cur).to_biguint().expect("ordered");
            match out.last_mut() {
                Some(Segment { id: last, len: l, .. }) if *last == id => *l += len,
                _ => out.push(Segment { id, start: cur.clone(), len }),
            }
            cur = c;
        }
        out
    }
}

/// An inhomogeneous Markov measure on the golden-mean shift.
#[derive(Debug)]
pub struct MeasureSpec {
    schedule: BlockSchedule,
    matrices: Vec<StochasticMatrix>,
    base: ProbVector,
    tail: TailRule,
    boundaries: Vec<BigInt>,
    cache: Vec<OnceLock<ProbVector>>,
}

impl Clone for MeasureSpec {
    fn clone(&self) -> Self {
        Self::with_tail(self.schedule.clone(), self.tail).expect("already validated")
    }
}

impl MeasureSpec {
    pub fn new(schedule: BlockSchedule) -> Result<Self> {
        Self::with_tail(schedule, TailRule::Construction { approximation_cap: None })
    }

    pub fn with_tail(schedule: BlockSchedule, tail: TailRule) -> Result<Self> {
        let mut matrices = vec![golden_matrix()];
        for lv in schedule.levels() {
            matrices.push(perturbed_matrix(lv.lambda)?);
        }
        let boundaries = schedule.boundaries();
        let cache = boundaries.iter().map(|_| OnceLock::new()).collect();
        Ok(Self { schedule, matrices, base: golden_stationary(), tail, boundaries, cache })
    }

    /// The stationary measure of Q.
    pub fn stationary() -> Self {
        Self::new(BlockSchedule::constant()).expect("empty schedule")
    }

    pub fn schedule(&self) -> &BlockSchedule {
        &self.schedule
    }

    pub fn tail(&self) -> TailRule {
        self.tail
    }

    pub fn adjacency(&self) -> AdjacencyMatrix {
        AdjacencyMatrix::golden_mean()
    }

    pub fn matrix(&self, id: MatrixId) -> &StochasticMatrix {
        match id {
            MatrixId::Base => &self.matrices[0],
            MatrixId::Level(l) => &self.matrices[l],
        }
    }

    pub fn matrix_at(&self, j: &BigInt) -> &StochasticMatrix {
        self.matrix(self.schedule.matrix_at(j))
    }

    pub fn base_marginal(&self) -> &ProbVector {
        &self.base
    }

    fn boundary_marginal(&self, i: usize) -> &ProbVector {
        self.cache[i].get_or_init(|| {
            if i == 0 {
                return self.base.clone();
            }
            let prev = self.boundary_marginal(i - 1);
            let len = (&self.boundaries[i] - &self.boundaries[i - 1]).to_biguint().expect("sorted");
            let m = self.matrix_at(&self.boundaries[i - 1]).matrix().pow(&len);
            normalise(m.left_mul(prev.entries()))
        })
    }

    /// Product P_from · P_{from+1} ⋯ P_{to−1} (identity when `to ≤ from`).
    pub fn transition_product(&self, from: &BigInt, to: &BigInt) -> Matrix<f64> {
        let mut acc = Matrix::identity_like(3, &0.0);
        for seg in self.schedule.segments(from, to) {
            acc = acc.mul(&self.matrix(seg.id).matrix().pow(&seg.len));
        }
        acc
    }
}

fn normalise(v: Vec<f64>) -> ProbVector {
    let total: f64 = v.iter().sum();
    ProbVector::trusted(v.into_iter().map(|x| x / total).collect())
}

/// The marginal π_n, propagated from the nearest cached block boundary.
pub fn propagate_marginal(spec: &MeasureSpec, n: &BigInt) -> ProbVector {
    let Some(i) = spec.boundaries.iter().rposition(|b| b <= n) else {
        return spec.base.clone();
    };
    let from = spec.boundary_marginal(i);
    let gap = (n - &spec.boundaries[i]).to_biguint().expect("ordered");
    if gap.is_zero() {
        return from.clone();
    }
    let m = spec.matrix_at(&spec.boundaries[i]).matrix().pow(&gap);
    normalise(m.left_mul(from.entries()))
}

/// Natural log of the cylinder's mass; −∞ when the word is forbidden.
pub fn cylinder_measure(spec: &MeasureSpec, c: &Cylinder) -> f64 {
    let w = &c.word;
    if w.symbols.iter().any(|&s| s as usize >= 3) || !symbols_admissible(&w.symbols, &spec.adjacency()) {
        return f64::NEG_INFINITY;
    }
    let mut acc = propagate_marginal(spec, &w.start).ln(w.symbols[0] as usize);
    let end = w.end();
    let mut offset = 0usize;
    for seg in spec.schedule.segments(&w.start, &end) {
        let m = spec.matrix(seg.id);
        let len = seg.len.to_usize().expect("window length fits in memory");
        for pair in w.symbols[offset..offset + len + 1].windows(2) {
            acc += m.get(pair[0] as usize, pair[1] as usize).ln();
        }
        offset += len;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::PHI;
    use crate::tms::{enumerate_admissible, Word};

    pub(crate) fn base_case(lambda: f64) -> MeasureSpec {
        let lv = BlockLevel { lambda, start: 1.into(), mid: 3.into(), end: 6.into() };
        MeasureSpec::new(BlockSchedule::new(vec![lv]).unwrap()).unwrap()
    }

    #[test]
    fn schedule_assigns_blocks() {
        let spec = base_case(1.5);
        let s = spec.schedule();
        for j in [-5, 0, 3, 4, 5, 6, 100] {
            assert_eq!(s.matrix_at(&BigInt::from(j)), MatrixId::Base, "j = {j}");
        }
        for j in [1, 2] {
            assert_eq!(s.matrix_at(&BigInt::from(j)), MatrixId::Level(1));
        }
        let segs = s.segments(&BigInt::from(-2), &BigInt::from(8));
        let ids: Vec<_> = segs.iter().map(|g| (g.id, g.start.to_i64().unwrap(), g.len.to_u64().unwrap())).collect();
        assert_eq!(ids, vec![(MatrixId::Base, -2, 3), (MatrixId::Level(1), 1, 2), (MatrixId::Base, 3, 5)]);
    }

    #[test]
    fn contributing_intervals_merge_translates() {
        let spec = base_case(1.5);
        let s = spec.schedule();
        assert!(s.contributing_intervals(&BigInt::zero()).is_empty());
        let iv = s.contributing_intervals(&BigInt::from(1));
        assert_eq!(iv, vec![(BigInt::from(1), BigInt::from(4))]);
        let iv = s.contributing_intervals(&BigInt::from(10));
        assert_eq!(iv, vec![(BigInt::from(1), BigInt::from(3)), (BigInt::from(11), BigInt::from(13))]);
    }

    #[test]
    fn rejects_gapped_levels() {
        let a = BlockLevel { lambda: 1.5, start: 1.into(), mid: 3.into(), end: 6.into() };
        let b = BlockLevel { lambda: 1.1, start: 7.into(), mid: 9.into(), end: 12.into() };
        assert!(BlockSchedule::new(vec![a, b]).is_err());
    }

    #[test]
    fn marginals_follow_consistency() {
        let spec = base_case(1.5);
        let q1 = perturbed_matrix(1.5).unwrap();
        assert_eq!(propagate_marginal(&spec, &BigInt::from(-7)), golden_stationary());
        assert_eq!(propagate_marginal(&spec, &BigInt::from(1)), golden_stationary());
        let pi2 = propagate_marginal(&spec, &BigInt::from(2));
        assert!(pi2.sup_distance(&q1.apply(&golden_stationary())) < 1e-15);
        for j in -2..12i64 {
            let here = propagate_marginal(&spec, &BigInt::from(j));
            let next = propagate_marginal(&spec, &BigInt::from(j + 1));
            let pushed = spec.matrix_at(&BigInt::from(j)).apply(&here);
            assert!(pushed.sup_distance(&next) < 1e-14, "j = {j}");
        }
        let stat = MeasureSpec::stationary();
        let far = propagate_marginal(&stat, &BigInt::from(10).pow(40));
        assert!(far.sup_distance(&golden_stationary()) < 1e-15);
    }

    #[test]
    fn cylinder_examples() {
        let stat = MeasureSpec::stationary();
        let c = Cylinder::parse("32", 0).unwrap();
        let expected = 1.0 / (PHI * 5f64.sqrt());
        assert!((cylinder_measure(&stat, &c).exp() - expected).abs() < 1e-15);
        assert_eq!(cylinder_measure(&stat, &Cylinder::parse("12", 0).unwrap()), f64::NEG_INFINITY);
    }

    #[test]
    fn cylinders_are_additive_in_both_directions() {
        let spec = base_case(1.5);
        let a = spec.adjacency();
        for len in 1..=6 {
            for start in -2..6i64 {
                for w in enumerate_admissible(&a, len, None, None).unwrap() {
                    let w = w.shifted(&BigInt::from(start));
                    let mass = cylinder_measure(&spec, &Cylinder::new(w.clone())).exp();
                    let mut fwd = 0.0;
                    let mut bwd = 0.0;
                    for s in 0..3u8 {
                        let mut f = w.symbols.clone();
                        f.push(s);
                        fwd += cylinder_measure(&spec, &Cylinder::new(Word { symbols: f, start: w.start.clone() })).exp();
                        let mut b = vec![s];
                        b.extend(&w.symbols);
                        bwd += cylinder_measure(&spec, &Cylinder::new(Word { symbols: b, start: &w.start - 1 })).exp();
                    }
                    assert!(((fwd - mass) / mass).abs() < 1e-12);
                    assert!(((bwd - mass) / mass).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn transition_product_spans_blocks() {
        let spec = base_case(2.0);
        let q = golden_matrix();
        let q1 = perturbed_matrix(2.0).unwrap();
        let direct = q.matrix().mul(q1.matrix()).mul(q1.matrix()).mul(q.matrix());
        let got = spec.transition_product(&BigInt::from(0), &BigInt::from(4));
        assert!(got.max_abs_diff(&direct) < 1e-15);
    }
}
