//! Exact occupation-time probabilities by dynamic programming.
//!
//! The chain starts from X_0 ~ π and moves with a fixed matrix P; the events
//! concern X_1, …, X_n (and X_{n+1} for pair counts).

use num_rational::BigRational;
use num_bigint::BigInt;

use super::{ProbVector, StochasticMatrix};
use crate::error::{Error, Result};

/// Longest horizon the dynamic programs accept.
pub const DP_CAP: u64 = 100_000;

fn check(n: u64) -> Result<usize> {
    if n == 0 {
        return Err(Error::Input("horizon must be positive".into()));
    }
    if n > DP_CAP {
        return Err(Error::DpCap { n, cap: DP_CAP });
    }
    Ok(n as usize)
}

/// Row vector π·P laid out as [state] for the first observed coordinate.
fn first_step(pi: &ProbVector, p: &StochasticMatrix) -> [f64; 3] {
    let v = p.apply(pi);
    [v.get(0), v.get(1), v.get(2)]
}

/// Runs the chain for `steps` transitions after X_1, tracking a counter that
/// `bump(prev, next)` increments. Returns mass by final count.
fn count_dp(start: Vec<[f64; 3]>, p: &StochasticMatrix, steps: usize, bump: impl Fn(usize, usize) -> bool) -> Vec<f64> {
    let mut cur = start;
    for _ in 0..steps {
        let mut next = vec![[0.0f64; 3]; cur.len() + 1];
        for (c, row) in cur.iter().enumerate() {
            for (s, &mass) in row.iter().enumerate() {
                if mass == 0.0 {
                    continue;
                }
                for (t, &pst) in p.row(s).iter().enumerate() {
                    if pst > 0.0 {
                        next[c + usize::from(bump(s, t))][t] += mass * pst;
                    }
                }
            }
        }
        while next.len() > 1 && next.last().is_some_and(|r| r.iter().all(|&x| x == 0.0)) {
            next.pop();
        }
        cur = next;
    }
    cur.iter().map(|r| r.iter().sum()).collect()
}

/// P(#{1 ≤ j ≤ n : X_j = 1} / n ∈ (lo, hi)), state 1 being index 0.
pub fn dp_frequency_event(pi: &ProbVector, p: &StochasticMatrix, n: u64, lo: f64, hi: f64) -> Result<f64> {
    let n = check(n)?;
    let first = first_step(pi, p);
    let start = vec![[0.0, first[1], first[2]], [first[0], 0.0, 0.0]];
    let by_count = count_dp(start, p, n - 1, |_, t| t == 0);
    Ok(by_count
        .iter()
        .enumerate()
        .filter(|(c, _)| {
            let f = *c as f64 / n as f64;
            f > lo && f < hi
        })
        .map(|(_, m)| m)
        .sum())
}

/// P(#{1 ≤ j ≤ n : X_j = 2, X_{j+1} = 3} / n > threshold), threshold taken as an exact rational.
pub fn dp_pair_event_exact(pi: &ProbVector, p: &StochasticMatrix, n: u64, threshold: &BigRational) -> Result<f64> {
    let nn = check(n)?;
    let first = first_step(pi, p);
    let by_count = count_dp(vec![first], p, nn, |s, t| s == 1 && t == 2);
    Ok(by_count
        .iter()
        .enumerate()
        .filter(|(c, _)| BigRational::new(BigInt::from(*c), BigInt::from(n)) > *threshold)
        .map(|(_, m)| m)
        .sum())
}

/// As [`dp_pair_event_exact`], comparing against the exact binary value of `threshold`.
pub fn dp_pair_event(pi: &ProbVector, p: &StochasticMatrix, n: u64, threshold: f64) -> Result<f64> {
    if threshold < 0.0 {
        check(n)?;
        return Ok(1.0);
    }
    let t = BigRational::from_float(threshold).ok_or_else(|| Error::Input("threshold must be finite".into()))?;
    dp_pair_event_exact(pi, p, n, &t)
}
