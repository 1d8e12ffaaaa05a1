//! Growth of the relaxation blocks and the resulting Hopf partial sums.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::construction::{LevelParams, Profile};
use crate::xreal::XReal;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthEntry {
    pub level: usize,
    /// (m_l − N_l)·λ_1^{−2N_l} ≥ 1, decided exactly.
    pub holds: bool,
    /// ln of the Hopf term ½(m_l − N_l)·λ_1^{−2N_l}; −inf when m_l ≤ N_l.
    pub ln_term: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConservativityReport {
    pub levels: Vec<GrowthEntry>,
    /// ln of Σ_{t ≤ T} ½(m_t − N_t)·λ_1^{−2N_t} for T = 1, 2, ….
    pub ln_partial_sums: Vec<f64>,
}

impl ConservativityReport {
    /// Whether the partial sum after `t` levels is at least `bound`.
    pub fn partial_sum_at_least(&self, t: usize, bound: f64) -> bool {
        t >= 1 && self.ln_partial_sums.get(t - 1).is_some_and(|s| *s >= bound.ln())
    }
}

fn ln_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

pub fn conservativity_report(params: &[LevelParams], profile: &Profile) -> ConservativityReport {
    let lambda1 = BigRational::from_float(profile.lambda1).expect("finite λ_1");
    let ln_l1 = profile.lambda1.ln();
    let mut levels = Vec::with_capacity(params.len());
    let mut ln_partial_sums = Vec::with_capacity(params.len());
    let mut acc = f64::NEG_INFINITY;
    for p in params {
        let gap: BigInt = &p.m - &p.big_n;
        let two_n = (&p.big_n * 2u32).to_f64().unwrap_or(f64::INFINITY);
        let ln_term = if gap.is_positive() {
            let g = XReal::from_bigint(&gap, 128 + gap.bits() as usize);
            g.log2_abs() * std::f64::consts::LN_2 - two_n * ln_l1 - std::f64::consts::LN_2
        } else {
            f64::NEG_INFINITY
        };
        let holds = gap.is_positive()
            && match (&p.big_n * 2u32).to_i32() {
                Some(e) => BigRational::from(gap.clone()) * lambda1.pow(-e) >= BigRational::one(),
                None => ln_term + std::f64::consts::LN_2 >= 0.0,
            };
        acc = ln_add(acc, ln_term);
        levels.push(GrowthEntry { level: p.level, holds, ln_term });
        ln_partial_sums.push(acc);
    }
    ConservativityReport { levels, ln_partial_sums }
}
