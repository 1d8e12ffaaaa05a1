//! Numerical checks of nonsingularity, exactness, conservativity and the
//! ratio-set machinery for constructed measures.

mod conservativity;
mod exactness;
mod hellinger;
mod ratio_set;
mod witness;

pub use conservativity::{conservativity_report, ConservativityReport, GrowthEntry};
pub use exactness::exactness_constant;
pub use hellinger::{boundary_term, hellinger_criterion, level_term, HellingerReport, Verdict, HELLINGER_C};
pub use ratio_set::{ratio_set_experiment, wilson_interval, Evidence, RatioSetConfig, RatioSetReport, TASK_SIZE};
pub use witness::{
    good_cylinder, marker_variant, witness_submass, witness_tail, witness_word, GoodBlock, Marker, WitnessContext,
};

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::{word_slice, BlockLevel, MatrixId, MeasureSpec, SparseWord, PHI};
use crate::tms::Word;

/// Read access to the symbols of a (possibly sparse) sample path.
pub trait Coordinates {
    /// The symbols on `start .. start + len`, if covered contiguously.
    fn slice(&self, start: &BigInt, len: usize) -> Option<&[u8]>;
}

impl Coordinates for Word {
    fn slice(&self, start: &BigInt, len: usize) -> Option<&[u8]> {
        word_slice(self, start, len)
    }
}

impl Coordinates for SparseWord {
    fn slice(&self, start: &BigInt, len: usize) -> Option<&[u8]> {
        SparseWord::slice(self, start, len)
    }
}

fn coverage(start: &BigInt, len: usize) -> Error {
    Error::Input(format!("sample does not cover coordinates {start} .. {start} + {len}"))
}

/// L = #{k ∈ [M, N) : x_k = 1} and V = #{k ∈ [M, N) : x_k = x_{k+1} = 1}.
/// The pair at k = N − 1 reads x_N, one coordinate past the block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockCounts {
    pub level: usize,
    pub ones: u64,
    pub double_ones: u64,
}

/// Counts over a symbol run covering a block of `n` coordinates plus one.
pub fn count_ones(symbols: &[u8], n: usize) -> (u64, u64) {
    let mut l = 0;
    let mut v = 0;
    for i in 0..n {
        if symbols[i] == 0 {
            l += 1;
            if symbols[i + 1] == 0 {
                v += 1;
            }
        }
    }
    (l, v)
}

fn block_len(b: &BlockLevel) -> Result<usize> {
    (&b.mid - &b.start).to_usize().ok_or_else(|| Error::WindowCap { len: (&b.mid - &b.start).to_string(), cap: crate::markov::WINDOW_CAP })
}

/// Counts for level `level`, read from the path translated by `shift`
/// (so `shift = n` gives the counts of T^n x).
pub fn block_counts_shifted<C: Coordinates + ?Sized>(x: &C, spec: &MeasureSpec, level: usize, shift: &BigInt) -> Result<BlockCounts> {
    let b = spec
        .schedule()
        .levels()
        .get(level.wrapping_sub(1))
        .ok_or_else(|| Error::Input(format!("no level {level} in the schedule")))?;
    let n = block_len(b)?;
    let start = &b.start + shift;
    let s = x.slice(&start, n + 1).ok_or_else(|| coverage(&start, n + 1))?;
    let (ones, double_ones) = count_ones(s, n);
    Ok(BlockCounts { level, ones, double_ones })
}

pub fn block_counts<C: Coordinates + ?Sized>(x: &C, spec: &MeasureSpec, level: usize) -> Result<BlockCounts> {
    block_counts_shifted(x, spec, level, &BigInt::from(0))
}

/// ln((1+φ)/(1+φλ)), the log-factor carried by each extra visit to state 1.
pub fn visit_log_factor(lambda: f64) -> f64 {
    ((1.0 + PHI) / (1.0 + PHI * lambda)).ln()
}

/// A log-derivative with a certified symmetric error radius in the log domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RnResult {
    pub log_value: f64,
    /// The true value lies in [log_value − eta, log_value + eta].
    pub eta: f64,
    /// Highest level evaluated exactly; `None` for the position-wise product.
    pub truncation: Option<usize>,
}

impl RnResult {
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }

    pub fn overlaps(&self, other: &RnResult) -> bool {
        (self.log_value - other.log_value).abs() <= self.eta + other.eta
    }
}

/// Rounding allowance per accumulated term.
const TERM_ALLOWANCE: f64 = 1e-12;

/// Product of the level count factors for k = 1..t:
/// Σ ΔL_k·ln((1+φ)/(1+φλ_k)) + ΔV_k·ln λ_k, with ΔL_k = L_k(T^n x) − L_k(x).
/// Levels above t are bounded by 2·min(n, n_k)·ln λ_k each.
pub fn rn_analytic<C: Coordinates + ?Sized>(spec: &MeasureSpec, x: &C, n: &BigInt, t: usize) -> Result<RnResult> {
    let levels = spec.schedule().levels();
    if t > levels.len() {
        return Err(Error::Input(format!("truncation level {t} exceeds the {} built levels", levels.len())));
    }
    if t >= 1 {
        let b = &levels[t - 1];
        let m = &b.end - &b.mid;
        if *n < b.mid || *n >= m {
            return Err(Error::Input(format!("shift {n} outside [N_t, m_t) = [{}, {m})", b.mid)));
        }
    }
    let mut log_value = 0.0;
    let mut terms = 0usize;
    for (u, b) in levels.iter().enumerate().take(t) {
        let now = block_counts(x, spec, u + 1)?;
        let moved = block_counts_shifted(x, spec, u + 1, n)?;
        let dl = moved.ones as f64 - now.ones as f64;
        let dv = moved.double_ones as f64 - now.double_ones as f64;
        log_value += dl * visit_log_factor(b.lambda) + dv * b.lambda.ln();
        terms += 2;
    }
    let mut eta = TERM_ALLOWANCE * (terms as f64 + 1.0) * (1.0 + log_value.abs());
    for b in levels.iter().skip(t) {
        let nb = &b.mid - &b.start;
        let reach = if n.abs() < nb { n.abs() } else { nb };
        eta += 2.0 * reach.to_f64().unwrap_or(f64::INFINITY) * b.lambda.ln();
    }
    Ok(RnResult { log_value, eta, truncation: Some(t) })
}

fn level_log_lambda(spec: &MeasureSpec, id: MatrixId) -> f64 {
    match id {
        MatrixId::Base => 0.0,
        MatrixId::Level(l) => spec.schedule().levels()[l - 1].lambda.ln(),
    }
}

fn ids_over(spec: &MeasureSpec, from: &BigInt, len: usize) -> Vec<MatrixId> {
    let mut ids = Vec::with_capacity(len);
    for seg in spec.schedule().segments(from, &(from + len)) {
        let k = seg.len.to_usize().expect("bounded");
        ids.extend(std::iter::repeat_n(seg.id, k));
    }
    ids
}

/// Σ_k ln P_{k−n}(x_k, x_{k+1}) − ln P_k(x_k, x_{k+1}) over contributing k ≤ cutoff.
/// Positions past the cutoff are bounded by ln λ(k−n) + ln λ(k) each.
pub fn rn_direct<C: Coordinates + ?Sized>(spec: &MeasureSpec, x: &C, n: &BigInt, cutoff: Option<&BigInt>) -> Result<RnResult> {
    let mut log_value = 0.0;
    let mut terms = 0usize;
    for (a, b) in spec.schedule().contributing_intervals(n) {
        let stop = match cutoff {
            Some(k) if k + 1 < b => {
                let next: BigInt = k + 1;
                next.max(a.clone())
            }
            _ => b.clone(),
        };
        let len = (&stop - &a).to_usize().ok_or_else(|| Error::WindowCap { len: (&stop - &a).to_string(), cap: crate::markov::WINDOW_CAP })?;
        if len == 0 {
            continue;
        }
        let s = x.slice(&a, len + 1).ok_or_else(|| coverage(&a, len + 1))?;
        let here = ids_over(spec, &a, len);
        let there = ids_over(spec, &(&a - n), len);
        for i in 0..len {
            if here[i] == there[i] {
                continue;
            }
            let (p, q) = (s[i] as usize, s[i + 1] as usize);
            log_value += spec.matrix(there[i]).get(p, q).ln() - spec.matrix(here[i]).get(p, q).ln();
            terms += 1;
        }
    }
    let mut eta = TERM_ALLOWANCE * (terms as f64 + 1.0) * (1.0 + log_value.abs());
    if let Some(k) = cutoff {
        for b in spec.schedule().levels() {
            let lnl = b.lambda.ln();
            for (lo, hi) in [(b.start.clone(), b.mid.clone()), (&b.start + n, &b.mid + n)] {
                let from = if lo > *k { lo } else { k + 1 };
                if from < hi {
                    eta += (&hi - &from).to_f64().unwrap_or(f64::INFINITY) * lnl;
                }
            }
        }
    }
    Ok(RnResult { log_value, eta, truncation: None })
}

/// ln λ of the matrix governing position `j`; zero on Q positions.
pub fn log_lambda_at(spec: &MeasureSpec, j: &BigInt) -> f64 {
    level_log_lambda(spec, spec.schedule().matrix_at(j))
}
