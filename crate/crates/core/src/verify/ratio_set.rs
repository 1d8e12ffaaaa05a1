//! Monte-Carlo evidence that a lattice value lies in the ratio set.

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{rn_analytic, witness_submass, WitnessContext};
use crate::construction::LevelParams;
use crate::error::{Error, Result};
use crate::markov::{cylinder_measure, MeasureSpec, SparsePlan, PHI};
use crate::tms::Cylinder;

/// Samples drawn per seeded task; fixed so results do not depend on the thread count.
pub const TASK_SIZE: u64 = 1024;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioSetConfig {
    /// Level j whose ratio λ_j(1+φ)/(1+φλ_j) is targeted.
    pub target: usize,
    pub eps: f64,
    pub samples: u64,
    pub seed: u64,
    /// Shifts 4·l·k_t for l = 1..=shift_count.
    pub shift_count: usize,
}

impl Default for RatioSetConfig {
    fn default() -> Self {
        Self { target: 1, eps: 0.05, samples: 100_000, seed: 0, shift_count: 8 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evidence {
    Positive,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioSetReport {
    pub level: usize,
    pub target: usize,
    pub ratio: f64,
    pub eps: f64,
    pub cylinder: Cylinder,
    /// ln μ(B).
    pub log_cylinder_mass: f64,
    #[serde(with = "crate::decimal::list")]
    pub shifts: Vec<BigInt>,
    pub samples: u64,
    /// Samples with T^M x ∈ B, per shift.
    pub returns: Vec<u64>,
    /// Returns whose derivative is within ε of the ratio, per shift.
    pub hits: Vec<u64>,
    /// Samples hitting for at least one shift.
    pub union_hits: u64,
    /// 95% Wilson interval for the conditional hit probability given B.
    pub interval: (f64, f64),
    /// The same interval scaled by μ(B).
    pub mass_interval: (f64, f64),
    /// ln of the exactly computed witness sub-event mass at the first shift.
    pub log_witness_mass: Option<f64>,
    pub verdict: Evidence,
}

/// Wilson score interval for `hits` successes in `n` trials.
pub fn wilson_interval(hits: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    let lo = if hits == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if hits == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

fn ratio_of(lambda: f64) -> f64 {
    lambda * (1.0 + PHI) / (1.0 + PHI * lambda)
}

#[derive(Clone, Default)]
struct Tally {
    returns: Vec<u64>,
    hits: Vec<u64>,
    union: u64,
}

impl Tally {
    fn merge(mut self, o: Tally) -> Tally {
        for (a, b) in self.returns.iter_mut().zip(o.returns) {
            *a += b;
        }
        for (a, b) in self.hits.iter_mut().zip(o.hits) {
            *a += b;
        }
        self.union += o.union;
        self
    }
}

/// Samples x from μ conditioned on B and records, for each shift M, whether
/// T^M x ∈ B with |(T^M)'(x)/r − 1| ≤ ε. Shifts are multiples of 4k_t for the
/// top built level t; without levels the stride is 4 and the ratio is 1.
pub fn ratio_set_experiment(spec: &MeasureSpec, params: &[LevelParams], b: &Cylinder, config: &RatioSetConfig) -> Result<RatioSetReport> {
    let levels = spec.schedule().levels();
    let t = levels.len();
    if params.len() != t {
        return Err(Error::Input(format!("{} parameter levels for a {t}-level spec", params.len())));
    }
    if !(config.eps > 0.0) || config.samples == 0 || config.shift_count == 0 {
        return Err(Error::Input("ratio-set runs need ε > 0, samples > 0 and at least one shift".into()));
    }
    let (lo, hi) = b.range();
    let log_b = cylinder_measure(spec, b);
    if log_b == f64::NEG_INFINITY {
        return Err(Error::Input("cylinder has zero mass".into()));
    }
    let ratio = if t == 0 {
        1.0
    } else {
        let lam = params.get(config.target.wrapping_sub(1)).ok_or_else(|| Error::Input(format!("no level {} to target", config.target)))?;
        ratio_of(lam.lambda_f64())
    };
    let (stride, reach, limit) = match params.last() {
        Some(p) => (&p.k_mix * 4, p.big_n.clone(), Some(p.m.clone())),
        None => (BigInt::from(4), hi.clone(), None),
    };
    let mut shifts = Vec::new();
    for l in 1..=config.shift_count {
        let s = &stride * l;
        if limit.as_ref().is_some_and(|m| s >= *m) {
            break;
        }
        shifts.push(s);
    }
    let cover = |x: &BigInt| -> Result<usize> {
        x.to_usize().ok_or_else(|| Error::WindowCap { len: x.to_string(), cap: crate::markov::WINDOW_CAP })
    };
    // first window spans B and every block through N_t; each shifted window mirrors it
    let top = (&reach).max(&hi) + 1;
    let len = cover(&(&top - &lo + 1))?;
    let mut windows = vec![(lo.clone(), len)];
    for s in &shifts {
        if s + &lo <= windows.last().expect("non-empty").0.clone() + windows.last().expect("non-empty").1 {
            return Err(Error::ShiftRange { shift: s.to_string(), reason: "shifted window overlaps the previous one".into() });
        }
        windows.push((s + &lo, len));
    }
    let plan = SparsePlan::new(spec, &windows)?;
    let b_len = b.len();
    let lnr = ratio.ln();

    let tasks = config.samples.div_ceil(TASK_SIZE);
    let tally = (0..tasks)
        .into_par_iter()
        .map(|task| -> Result<Tally> {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(task);
            let count = TASK_SIZE.min(config.samples - task * TASK_SIZE);
            let mut tally = Tally { returns: vec![0; shifts.len()], hits: vec![0; shifts.len()], union: 0 };
            for _ in 0..count {
                let x = plan.sample(&b.word.symbols, &mut rng)?;
                let mut any = false;
                for (i, s) in shifts.iter().enumerate() {
                    let seen = x.slice(&(s + &lo), b_len).ok_or_else(|| Error::Input("sample misses a shifted window".into()))?;
                    if seen != b.word.symbols.as_slice() {
                        continue;
                    }
                    tally.returns[i] += 1;
                    let rn = rn_analytic(spec, &x, s, t)?;
                    let worst = (rn.log_value - lnr).abs() + rn.eta;
                    if worst.exp_m1() <= config.eps && (-worst).exp_m1() >= -config.eps {
                        tally.hits[i] += 1;
                        any = true;
                    }
                }
                tally.union += u64::from(any);
            }
            Ok(tally)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(Tally { returns: vec![0; shifts.len()], hits: vec![0; shifts.len()], union: 0 }, Tally::merge);

    let interval = wilson_interval(tally.union, config.samples, Z95);
    let mb = log_b.exp();
    let log_witness_mass = match (params.len() >= 2, shifts.first()) {
        (true, Some(s)) => WitnessContext::new(params, t, config.target).and_then(|ctx| witness_submass(spec, &ctx, b, s)).ok(),
        _ => None,
    };
    Ok(RatioSetReport {
        level: t,
        target: config.target,
        ratio,
        eps: config.eps,
        cylinder: b.clone(),
        log_cylinder_mass: log_b,
        shifts,
        samples: config.samples,
        returns: tally.returns,
        hits: tally.hits,
        union_hits: tally.union,
        interval,
        mass_interval: (interval.0 * mb, interval.1 * mb),
        log_witness_mass,
        verdict: if interval.0 > 0.0 { Evidence::Positive } else { Evidence::Inconclusive },
    })
}
