//! Stochastic matrices, stationary vectors, block schedules and the
//! inhomogeneous Markov measures they generate.

mod dp;
mod sample;
mod schedule;

pub use dp::{dp_frequency_event, dp_pair_event, dp_pair_event_exact, DP_CAP};
pub(crate) use sample::word_slice;
pub use sample::{sample_sparse, sample_window, sample_window_with, SparsePlan, SparseWord, WINDOW_CAP};
pub use schedule::{
    cylinder_measure, propagate_marginal, BlockLevel, BlockSchedule, MatrixId, MeasureSpec, Segment, TailRule,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{solve, Matrix, Scalar};
use crate::tms::{mixing_index, AdjacencyMatrix};
use crate::xreal::XReal;

/// The golden ratio.
pub const PHI: f64 = 1.618_033_988_749_895;

/// Tolerance for row sums and vector normalisation.
pub const SUM_TOL: f64 = 1e-12;

/// A probability vector over the states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() || entries.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Input("probability entries must be finite and non-negative".into()));
        }
        let total: f64 = entries.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::Input(format!("probability vector sums to {total}")));
        }
        Ok(Self(entries))
    }

    /// Wraps a vector already known to be normalised up to rounding.
    pub(crate) fn trusted(entries: Vec<f64>) -> Self {
        Self(entries)
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, s: usize) -> f64 {
        self.0[s]
    }

    pub fn ln(&self, s: usize) -> f64 {
        self.0[s].ln()
    }

    pub fn sup_distance(&self, o: &Self) -> f64 {
        self.0.iter().zip(&o.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// A row-stochastic matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct StochasticMatrix {
    m: Matrix<f64>,
}

impl StochasticMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        for (i, r) in rows.iter().enumerate() {
            if r.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                return Err(Error::Input(format!("row {} has a negative or non-finite entry", i + 1)));
            }
            let total: f64 = r.iter().sum();
            if (total - 1.0).abs() > SUM_TOL {
                return Err(Error::Input(format!("row {} sums to {total}", i + 1)));
            }
        }
        Ok(Self { m: Matrix::from_rows(rows)? })
    }

    pub fn size(&self) -> usize {
        self.m.size()
    }

    pub fn get(&self, s: usize, t: usize) -> f64 {
        *self.m.get(s, t)
    }

    pub fn row(&self, s: usize) -> &[f64] {
        self.m.row(s)
    }

    pub fn matrix(&self) -> &Matrix<f64> {
        &self.m
    }

    pub fn support(&self) -> AdjacencyMatrix {
        let n = self.size();
        AdjacencyMatrix::new((0..n).map(|i| (0..n).map(|j| u8::from(self.get(i, j) > 0.0)).collect()).collect())
            .expect("a stochastic matrix has no dead rows")
    }

    pub fn apply(&self, v: &ProbVector) -> ProbVector {
        ProbVector::trusted(self.m.left_mul(v.entries()))
    }
}

/// Q with row 1 replaced by (φλ/(1+φλ), 0, 1/(1+φλ)); λ = 1 gives Q itself.
pub fn perturbed_rows<S: Scalar>(lambda: &S, phi: &S) -> Vec<Vec<S>> {
    let one = lambda.lift(1.0);
    let zero = lambda.lift(0.0);
    let row = |l: &S| {
        let pl = phi.times(l);
        let den = one.plus(&pl);
        vec![pl.over(&den), zero.clone(), one.over(&den)]
    };
    vec![row(lambda), row(&one), vec![zero.clone(), one.clone(), zero]]
}

pub fn golden_matrix() -> StochasticMatrix {
    StochasticMatrix::new(perturbed_rows(&1.0, &PHI)).expect("Q is stochastic")
}

pub fn perturbed_matrix(lambda: f64) -> Result<StochasticMatrix> {
    if !(lambda >= 1.0 && lambda.is_finite()) {
        return Err(Error::Input(format!("perturbation parameter must be a finite value >= 1, got {lambda}")));
    }
    StochasticMatrix::new(perturbed_rows(&lambda, &PHI))
}

pub fn phi_ext(bits: usize) -> XReal {
    let five = XReal::from_f64(5.0, bits);
    (XReal::one(bits) + five.sqrt().expect("sqrt 5")) / XReal::from_f64(2.0, bits)
}

pub fn perturbed_matrix_ext(lambda: &XReal) -> Matrix<XReal> {
    Matrix::from_rows(perturbed_rows(lambda, &phi_ext(lambda.bits()))).expect("square")
}

/// (1/√5, 1/(φ√5), 1/(φ√5)).
pub fn golden_stationary() -> ProbVector {
    let s5 = 5f64.sqrt();
    ProbVector::trusted(vec![1.0 / s5, 1.0 / (PHI * s5), 1.0 / (PHI * s5)])
}

pub fn golden_stationary_ext(bits: usize) -> Vec<XReal> {
    let s5 = XReal::from_f64(5.0, bits).sqrt().expect("sqrt 5");
    let a = XReal::one(bits) / &s5;
    let b = &a / &phi_ext(bits);
    vec![a, b.clone(), b]
}

/// Solves πP = π with Σπ = 1 by replacing one equation of (I − Pᵀ)π = 0.
pub fn stationary_generic<S: Scalar>(p: &Matrix<S>) -> Result<Vec<S>> {
    let n = p.size();
    let proto = p.get(0, 0);
    let rows = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == n - 1 {
                        proto.lift(1.0)
                    } else {
                        let id = proto.lift(if i == j { 1.0 } else { 0.0 });
                        id.minus(p.get(j, i))
                    }
                })
                .collect()
        })
        .collect();
    let mut rhs = vec![proto.lift(0.0); n];
    rhs[n - 1] = proto.lift(1.0);
    solve(&Matrix::from_rows(rows)?, &rhs)
}

pub fn stationary_distribution(p: &StochasticMatrix) -> Result<ProbVector> {
    if mixing_index(&p.support()).is_none() {
        return Err(Error::Input("stationary vector needs an irreducible aperiodic matrix".into()));
    }
    let mut v = stationary_generic(p.matrix())?;
    for x in &mut v {
        *x = x.max(0.0);
    }
    let total: f64 = v.iter().sum();
    Ok(ProbVector::trusted(v.into_iter().map(|x| x / total).collect()))
}

fn max_relative_deviation<S: Scalar>(pk: &Matrix<S>, pi: &[S]) -> S {
    let n = pk.size();
    let one = pi[0].lift(1.0);
    let mut worst = pi[0].lift(0.0);
    for s in 0..n {
        for (t, pt) in pi.iter().enumerate() {
            let d = pk.get(s, t).over(pt).minus(&one).magnitude();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Scan cap for mixing-time searches.
pub const MIXING_SCAN_CAP: u64 = 1_000_000;

/// Smallest k ≥ 1 with max_{s,t} |P^k(s,t)/π(t) − 1| ≤ ε, in double precision.
pub fn relative_mixing_time(p: &StochasticMatrix, eps: f64) -> Result<u64> {
    if !(eps > 0.0) {
        return Err(Error::Input("mixing tolerance must be positive".into()));
    }
    if eps < 1e-12 {
        return Err(Error::PrecisionFloor(format!(
            "tolerance {eps:e} is below double-precision resolution; use the extended-precision variant"
        )));
    }
    let pi = stationary_distribution(p)?;
    scan_mixing(p.matrix(), pi.entries(), &eps)
}

/// Extended-precision variant; ε must sit well above 2^{−bits}.
pub fn relative_mixing_time_ext(p: &Matrix<XReal>, pi: &[XReal], eps: &XReal) -> Result<u64> {
    let bits = p.get(0, 0).bits();
    if eps.is_negative() || eps.is_zero() {
        return Err(Error::Input("mixing tolerance must be positive".into()));
    }
    if eps.log2_abs() < -((bits as f64) - 40.0) {
        return Err(Error::PrecisionFloor(format!(
            "tolerance 2^{:.1} needs more than the {bits}-bit mantissa",
            eps.log2_abs()
        )));
    }
    scan_mixing(p, pi, eps)
}

fn scan_mixing<S: Scalar>(p: &Matrix<S>, pi: &[S], eps: &S) -> Result<u64> {
    let mut pk = p.clone();
    for k in 1..=MIXING_SCAN_CAP {
        if max_relative_deviation(&pk, pi) <= *eps {
            return Ok(k);
        }
        pk = pk.mul(p);
    }
    Err(Error::NotMixing { cap: MIXING_SCAN_CAP as usize })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_stationary_solves_the_balance_equations() {
        let pi = stationary_distribution(&golden_matrix()).unwrap();
        assert!(pi.sup_distance(&golden_stationary()) < 1e-15);
        assert!((pi.get(0) - 0.4472136).abs() < 1e-7);
        assert!((pi.get(1) - 0.2763932).abs() < 1e-7);
    }

    #[test]
    fn uniform_matrix_has_uniform_stationary_vector() {
        let u = StochasticMatrix::new(vec![vec![1.0 / 3.0; 3]; 3]).unwrap();
        let pi = stationary_distribution(&u).unwrap();
        assert!(pi.entries().iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn perturbed_matrix_examples() {
        assert_eq!(perturbed_matrix(1.0).unwrap(), golden_matrix());
        let q2 = perturbed_matrix(2.0).unwrap();
        assert!((q2.get(0, 0) - 2.0 * PHI / (1.0 + 2.0 * PHI)).abs() < 1e-15);
        assert!((q2.get(0, 2) - 1.0 / (1.0 + 2.0 * PHI)).abs() < 1e-15);
        assert_eq!(q2.row(1), golden_matrix().row(1));
        assert_eq!(q2.row(2), golden_matrix().row(2));
        assert!(perturbed_matrix(0.9).is_err());
    }

    #[test]
    fn stationary_of_q2_against_power_iteration() {
        let q2 = perturbed_matrix(2.0).unwrap();
        let pi = stationary_distribution(&q2).unwrap();
        let mut v = ProbVector::trusted(vec![1.0, 0.0, 0.0]);
        for _ in 0..400 {
            v = q2.apply(&v);
        }
        assert!(pi.sup_distance(&v) < 1e-13);
        assert!(q2.apply(&pi).sup_distance(&pi) < 1e-15);
    }

    #[test]
    fn periodic_matrix_is_rejected() {
        let c = StochasticMatrix::new(vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]]).unwrap();
        assert!(stationary_distribution(&c).is_err());
    }

    #[test]
    fn bad_rows_are_rejected() {
        assert!(StochasticMatrix::new(vec![vec![0.5, 0.4], vec![0.5, 0.5]]).is_err());
        assert!(ProbVector::new(vec![0.5, 0.6]).is_err());
    }

    fn scan_oracle(eps: f64) -> u64 {
        let q = golden_matrix();
        let pi = golden_stationary();
        let mut pk = q.matrix().clone();
        let mut k = 1;
        loop {
            let ok = (0..3).all(|s| (0..3).all(|t| (pk.get(s, t) / pi.get(t) - 1.0).abs() <= eps));
            if ok {
                return k;
            }
            pk = pk.mul(q.matrix());
            k += 1;
        }
    }

    #[test]
    fn mixing_times_match_a_direct_scan() {
        let q = golden_matrix();
        for eps in [1.0, 1e-2, 1e-4] {
            assert_eq!(relative_mixing_time(&q, eps).unwrap(), scan_oracle(eps));
        }
        assert_eq!(relative_mixing_time(&q, 100.0).unwrap(), 1);
        // subdominant modulus 1/φ² fixes the growth rate
        let k2 = relative_mixing_time(&q, 1e-2).unwrap() as f64;
        let k4 = relative_mixing_time(&q, 1e-4).unwrap() as f64;
        let predicted = (1e2f64).ln() / (PHI * PHI).ln();
        assert!(((k4 - k2) - predicted).abs() <= 2.0);
        assert!(matches!(relative_mixing_time(&q, 1e-20), Err(Error::PrecisionFloor(_))));
    }

    #[test]
    fn extended_mixing_time_reaches_tiny_tolerances() {
        let bits = 512;
        let q = perturbed_matrix_ext(&XReal::one(bits));
        let pi = golden_stationary_ext(bits);
        let eps = XReal::from_f64(1e-60, bits);
        let k = relative_mixing_time_ext(&q, &pi, &eps).unwrap();
        let predicted = 60.0 * 10f64.ln() / (PHI * PHI).ln();
        assert!((k as f64 - predicted).abs() < 4.0);
        let k_small = relative_mixing_time_ext(&q, &pi, &XReal::from_f64(1e-4, bits)).unwrap();
        assert_eq!(k_small, relative_mixing_time(&golden_matrix(), 1e-4).unwrap());
        let floor = XReal::from_f64(1e-200, 128);
        assert!(matches!(
            relative_mixing_time_ext(&perturbed_matrix_ext(&XReal::one(128)), &golden_stationary_ext(128), &floor),
            Err(Error::PrecisionFloor(_))
        ));
    }
}
