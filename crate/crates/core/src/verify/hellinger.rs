//! Square-root (Hellinger) distance series between consecutive transition
//! matrices, deciding equivalence of the measure with its shift.

use serde::{Deserialize, Serialize};

use crate::markov::{MeasureSpec, TailRule, PHI};

/// Global constant C with level_term(λ) ≤ C·(λ − 1)² for all λ ≥ 1.
pub const HELLINGER_C: f64 = 2.0 * PHI / ((1.0 + PHI) * (1.0 + PHI));

/// Worst-case contribution of one boundary between Q and Q_λ (state 1 row).
pub fn boundary_term(lambda: f64) -> f64 {
    let a = (lambda * PHI / (1.0 + lambda * PHI)).sqrt() - (PHI / (1.0 + PHI)).sqrt();
    let b = (1.0 / (1.0 + lambda * PHI)).sqrt() - (1.0 / (1.0 + PHI)).sqrt();
    a * a + b * b
}

/// Both boundaries of one level.
pub fn level_term(lambda: f64) -> f64 {
    2.0 * boundary_term(lambda)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Summable,
    Divergent,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HellingerReport {
    pub horizon: usize,
    /// Boundary terms in schedule order, two per level.
    pub boundary_terms: Vec<f64>,
    /// Running sums after each level.
    pub partial_sums: Vec<f64>,
    /// Running sums of C·(λ_k − 1)².
    pub dominating_sums: Vec<f64>,
    /// Bound on everything past the horizon.
    pub tail_bound: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
}

/// Evaluates the series for levels 1..=horizon and bounds the remainder.
///
/// Under the construction rule the horizon is clamped to the built levels and
/// later levels obey ln λ_u < 2^{−u}/(2·m_eff) with m_eff ≥ m_eff(T), so the
/// remainder is at most (4/3)·C·(e^{x} − 1)² with x = 1/(2^{T+2}·m_eff(T)).
pub fn hellinger_criterion(spec: &MeasureSpec, horizon: usize, tolerance: f64) -> HellingerReport {
    let levels = spec.schedule().levels();
    let lambda_at = |u: usize| -> f64 {
        match levels.get(u - 1) {
            Some(l) => l.lambda,
            None => levels.last().map_or(1.0, |l| l.lambda),
        }
    };
    let horizon = match spec.tail() {
        TailRule::Construction { .. } => horizon.min(levels.len()),
        TailRule::Constant => horizon,
    };
    let mut boundary_terms = Vec::with_capacity(2 * horizon);
    let mut partial_sums = Vec::with_capacity(horizon);
    let mut dominating_sums = Vec::with_capacity(horizon);
    let (mut s, mut d) = (0.0, 0.0);
    for u in 1..=horizon {
        let lam = lambda_at(u);
        let b = boundary_term(lam);
        boundary_terms.extend([b, b]);
        s += 2.0 * b;
        d += HELLINGER_C * (lam - 1.0).powi(2);
        partial_sums.push(s);
        dominating_sums.push(d);
    }
    let tail_bound = match spec.tail() {
        TailRule::Constant => {
            let lam = lambda_at(horizon.max(1));
            if levels.is_empty() || lam == 1.0 {
                0.0
            } else {
                f64::INFINITY
            }
        }
        TailRule::Construction { approximation_cap } => {
            if horizon == 0 {
                // nothing built: the measure is stationary
                if levels.is_empty() {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                let l = &levels[horizon - 1];
                let m = (&l.end - &l.mid).to_string().parse::<f64>().unwrap_or(f64::INFINITY);
                let m_eff = approximation_cap.map_or(m, |c| m.min(c as f64));
                let x = 1.0 / (2f64.powi(horizon as i32 + 2) * m_eff);
                4.0 / 3.0 * HELLINGER_C * x.exp_m1().powi(2)
            }
        }
    };
    let verdict = if tail_bound.is_infinite() {
        Verdict::Divergent
    } else if tail_bound < tolerance {
        Verdict::Summable
    } else {
        Verdict::Inconclusive
    };
    HellingerReport { horizon, boundary_terms, partial_sums, dominating_sums, tail_bound, tolerance, verdict }
}
