//! Level-by-level choice of the perturbation schedule.
//!
//! Each level l perturbs Q to Q_{λ_l} on a block of n_l coordinates, then
//! relaxes with Q for m_l coordinates. λ_l is tied to λ_1 through the
//! distortion f(x) = x(1+φ)/(1+φx): f(λ_l) = f(λ_1)^{1/K_l} with K_l a
//! multiple of K_{l−1}, so every ratio K_l/K_k is an integer.

mod validate;

pub use validate::{validate_params, Condition, ConditionStatus, LevelReport, ValidationReport};

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::decimal;
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Scalar};
use crate::markov::{
    dp_frequency_event, dp_pair_event_exact, golden_matrix, golden_stationary, golden_stationary_ext,
    perturbed_matrix, perturbed_matrix_ext, phi_ext, relative_mixing_time, relative_mixing_time_ext,
    stationary_generic, BlockLevel, BlockSchedule, MeasureSpec, ProbVector, TailRule, PHI,
};
use crate::xreal::XReal;

/// Coordinates per lattice step demanded of each perturbed block.
pub const ROOM_FACTOR: u64 = 20;
/// Per-step mass the (2,3) pair count must exceed, as numerator/denominator.
pub const PAIR_THRESHOLD: (u64, u64) = (1, 15);
/// Largest mantissa the builder will attempt.
pub const MAX_BITS: usize = 1 << 18;
/// Largest exact integer, in bits, the builder will materialise.
pub const MAX_INTEGER_BITS: f64 = (1u64 << 26) as f64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// The original constants throughout.
    Full,
    /// Relaxed tolerances so that level 2 is end-to-end executable.
    Desk,
}

/// Tunable constants of the construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub mode: Mode,
    pub lambda1: f64,
    #[serde(with = "decimal")]
    pub m0: BigInt,
    pub n1: u64,
    pub m1: u64,
    /// Mixing tolerance; `None` means 3^{−3N_l}.
    pub mixing_tolerance: Option<f64>,
    /// Per-trial failure probability; `None` means 9^{−3N_l}.
    pub failure_base: Option<f64>,
    /// Cap on m_{l−1} inside the finite-approximation condition; `None` means no cap.
    pub approximation_cap: Option<u64>,
    pub dp_cap: u64,
    /// Mantissa width; `None` sizes it from the tolerances.
    pub mantissa_bits: Option<usize>,
}

impl Profile {
    pub fn full() -> Self {
        Self {
            mode: Mode::Full,
            lambda1: 1.5,
            m0: BigInt::one(),
            n1: 2,
            m1: 3,
            mixing_tolerance: None,
            failure_base: None,
            approximation_cap: None,
            dp_cap: crate::markov::DP_CAP,
            mantissa_bits: None,
        }
    }

    pub fn desk() -> Self {
        Self {
            mode: Mode::Desk,
            mixing_tolerance: Some(1e-2),
            failure_base: Some(1e-2),
            approximation_cap: Some(10_000),
            ..Self::full()
        }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.lambda1 > 1.0 && self.lambda1.is_finite()) {
            return Err(Error::Input(format!("λ_1 must be a finite value > 1, got {}", self.lambda1)));
        }
        if self.m0 < BigInt::one() || self.n1 == 0 || self.m1 == 0 {
            return Err(Error::Input("base-case block lengths must be positive".into()));
        }
        for (name, v) in [("mixing tolerance", self.mixing_tolerance), ("failure base", self.failure_base)] {
            if let Some(x) = v {
                if !(x > 0.0 && x < 1.0) {
                    return Err(Error::Input(format!("{name} must lie in (0, 1)")));
                }
            }
        }
        Ok(())
    }

    /// Mantissa needed for the level whose perturbed block ends at `big_n`.
    pub fn working_bits(&self, big_n: &BigInt) -> Result<usize> {
        let needed = match self.mixing_tolerance {
            Some(_) => 256,
            None => {
                let n = big_n.to_f64().unwrap_or(f64::INFINITY);
                let b = 3.0 * n * 3f64.log2() + 128.0;
                if b > MAX_BITS as f64 {
                    return Err(Error::PrecisionFloor(format!(
                        "tolerance 3^(-3·{big_n}) needs about {b:.3e} mantissa bits"
                    )));
                }
                b.ceil() as usize
            }
        };
        match self.mantissa_bits {
            Some(b) if b < needed => Err(Error::PrecisionFloor(format!(
                "mantissa of {b} bits is below the {needed} bits this level needs"
            ))),
            Some(b) => Ok(b.max(needed)),
            None => Ok(needed.div_ceil(64) * 64),
        }
    }
}

/// Parameters of one level of the construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelParams {
    pub level: usize,
    /// λ_l as a decimal string at working precision.
    pub lambda: String,
    #[serde(with = "decimal::unsigned")]
    pub lattice_k: BigUint,
    /// Start of the perturbed block (M_{l−1}).
    #[serde(with = "decimal")]
    pub start: BigInt,
    #[serde(with = "decimal")]
    pub n: BigInt,
    /// End of the perturbed block (N_l).
    #[serde(with = "decimal")]
    pub big_n: BigInt,
    #[serde(with = "decimal")]
    pub k_mix: BigInt,
    #[serde(with = "decimal")]
    pub m: BigInt,
    /// End of the level (M_l).
    #[serde(with = "decimal")]
    pub big_m: BigInt,
    /// k ↦ K_l / K_k for k ≤ l.
    #[serde(with = "decimal::unsigned_map")]
    pub p_table: BTreeMap<usize, BigUint>,
    /// Exact frequency-event probability, absent when beyond the DP cap.
    pub dp_frequency: Option<f64>,
    pub dp_pair: Option<f64>,
    pub working_bits: usize,
}

impl LevelParams {
    pub fn lambda_f64(&self) -> f64 {
        self.lambda.parse().unwrap_or(f64::NAN)
    }

    pub fn lambda_ext(&self, bits: usize) -> Result<XReal> {
        XReal::parse(&self.lambda, bits)
    }

    /// log f(λ_l) as an exact multiple of log f(λ_1).
    pub fn log_distortion_coefficient(&self) -> BigRational {
        BigRational::new(BigInt::one(), BigInt::from(self.lattice_k.clone()))
    }
}

/// f(x) = x(1+φ)/(1+φx).
pub fn distortion_value(lambda: f64) -> f64 {
    lambda * (1.0 + PHI) / (1.0 + PHI * lambda)
}

/// Inverse of [`distortion_value`] on [1, 1+1/φ).
pub fn distortion_inverse(y: f64) -> f64 {
    y / (1.0 + PHI - PHI * y)
}

pub fn distortion_value_ext(lambda: &XReal) -> XReal {
    let phi = phi_ext(lambda.bits());
    let one = XReal::one(lambda.bits());
    lambda * &(&one + &phi) / (&one + &(&phi * lambda))
}

/// ln λ for f(λ) = e^u, accurate even when u is far below 2^{−bits}.
pub fn ln_lambda_from_log_distortion(u: &XReal) -> Result<XReal> {
    let phi = phi_ext(u.bits());
    let inner = -(&phi * &u.exp_m1()?);
    Ok(u - &inner.ln_1p()?)
}

fn big_to_x(n: &BigInt, bits: usize) -> XReal {
    XReal::from_bigint(n, bits)
}

fn bits_of(n: &BigInt) -> usize {
    n.bits() as usize
}

fn sup_distance<S: Scalar>(a: &[S], b: &[S]) -> S {
    let mut worst = a[0].lift(0.0);
    for (x, y) in a.iter().zip(b) {
        let d = x.minus(y).magnitude();
        if d > worst {
            worst = d;
        }
    }
    worst
}

/// 2^{−l} at the given precision.
fn half_pow(l: usize, bits: usize) -> XReal {
    XReal::one(bits) / XReal::from_f64(2.0, bits).powi(l)
}

/// Stationary vector of Q_λ in extended precision.
pub(crate) fn stationary_ext(lambda: &XReal) -> Result<Vec<XReal>> {
    stationary_generic(&perturbed_matrix_ext(lambda))
}

/// m_{l−1} as it enters the finite-approximation condition.
pub(crate) fn effective_m(prev_m: &BigInt, profile: &Profile) -> BigInt {
    match profile.approximation_cap {
        Some(c) => prev_m.clone().min(BigInt::from(c)),
        None => prev_m.clone(),
    }
}

/// Chooses (λ_l, K_l) with K_l the smallest multiple of K_{l−1} meeting the
/// finite-approximation and stationary-closeness bounds.
pub fn choose_lambda(l: usize, prev: &[LevelParams], profile: &Profile) -> Result<(XReal, BigUint)> {
    profile.check()?;
    if l == 1 {
        return Ok((XReal::from_f64(profile.lambda1, 256), BigUint::one()));
    }
    let last = prev.get(l - 2).ok_or_else(|| Error::Input(format!("level {l} needs level {} first", l - 1)))?;
    let m_eff = effective_m(&last.m, profile);
    let bits = (bits_of(&m_eff) + 256).div_ceil(64) * 64;
    let log_r = distortion_value_ext(&XReal::from_f64(profile.lambda1, bits)).ln()?;
    let bound = half_pow(l, bits);
    let two_m = big_to_x(&(&m_eff * 2), bits);
    let pi_q = golden_stationary_ext(bits);
    let k_prev = last.lattice_k.clone();

    let lambda_for = |q: &BigUint| -> Result<(XReal, XReal)> {
        let k = BigInt::from(&k_prev * q);
        let u = &log_r / &big_to_x(&k, bits);
        let ln_l = ln_lambda_from_log_distortion(&u)?;
        Ok((ln_l.exp()?, ln_l))
    };
    let passes = |q: &BigUint| -> Result<bool> {
        let (lam, ln_l) = lambda_for(q)?;
        if &two_m * &ln_l >= bound {
            return Ok(false);
        }
        Ok(sup_distance(&stationary_ext(&lam)?, &pi_q) < bound)
    };

    // ln λ ≈ (1+φ)·u for small u, which locates the answer to within a factor of two
    let one = XReal::one(bits);
    let guess = (&log_r * &(&(&one + &phi_ext(bits)) * &two_m)) / &(&bound * &big_to_x(&BigInt::from(k_prev.clone()), bits));
    let two = BigUint::from(2u32);
    let mut hi = guess.floor_bigint().to_biguint().unwrap_or_default().max(two.clone());
    while !passes(&hi)? {
        hi *= 2u32;
        if hi.bits() as usize > MAX_BITS {
            return Err(Error::Infeasible { level: l, reason: "no lattice refinement meets the bounds".into() });
        }
    }
    let mut lo = BigUint::one();
    if hi > two {
        let mut probe = &hi / 2u32;
        loop {
            if probe < two {
                break;
            }
            if passes(&probe)? {
                hi = probe.clone();
                probe /= 2u32;
            } else {
                lo = probe;
                break;
            }
        }
    }
    while &hi - &lo > BigUint::one() {
        let mid = (&hi + &lo) / 2u32;
        if passes(&mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let (lam, _) = lambda_for(&hi)?;
    Ok((lam, k_prev * hi))
}

/// Extended-precision marginals at M_{l−1}, N_l, M_l for each level.
pub(crate) fn boundary_marginals_ext(params: &[LevelParams], bits: usize) -> Result<Vec<[Vec<XReal>; 3]>> {
    let q = perturbed_matrix_ext(&XReal::one(bits));
    let mut pi = golden_stationary_ext(bits);
    let mut out = Vec::with_capacity(params.len());
    for p in params {
        let at_start = pi.clone();
        let ql = perturbed_matrix_ext(&p.lambda_ext(bits)?);
        let at_mid = ql.pow(&p.n.to_biguint().unwrap_or_default()).left_mul(&pi);
        let at_end = q.pow(&p.m.to_biguint().unwrap_or_default()).left_mul(&at_mid);
        pi = at_end.clone();
        out.push([at_start, at_mid, at_end]);
    }
    Ok(out)
}

fn marginal_at_start(prev: &[LevelParams], bits: usize) -> Result<Vec<XReal>> {
    Ok(match boundary_marginals_ext(prev, bits)?.last() {
        Some([_, _, end]) => end.clone(),
        None => golden_stationary_ext(bits),
    })
}

fn to_prob(v: &[XReal]) -> ProbVector {
    let raw: Vec<f64> = v.iter().map(XReal::to_f64).collect();
    let total: f64 = raw.iter().sum();
    ProbVector::new(raw.iter().map(|x| x / total).collect()).expect("marginal is a probability vector")
}

/// Confidence 1 − 1/l demanded of the block-typicality events.
pub fn confidence(l: usize) -> f64 {
    1.0 - 1.0 / l as f64
}

/// Window (1/√5 − 2^{−l}, 1/√5 + 2^{−l}) for the frequency of state 1.
pub fn frequency_window(l: usize) -> (f64, f64) {
    let c = 1.0 / 5f64.sqrt();
    let h = 0.5f64.powi(l as i32);
    (c - h, c + h)
}

/// Both typicality probabilities for a block of length `n` started from `pi`.
pub fn block_event_masses(pi: &ProbVector, lambda: f64, l: usize, n: u64) -> Result<(f64, f64)> {
    let ql = perturbed_matrix(lambda)?;
    let (lo, hi) = frequency_window(l);
    let freq = dp_frequency_event(pi, &ql, n, lo, hi)?;
    let th = BigRational::new(BigInt::from(PAIR_THRESHOLD.0), BigInt::from(PAIR_THRESHOLD.1));
    let pair = dp_pair_event_exact(pi, &ql, n, &th)?;
    Ok((freq, pair))
}

/// Block length with its verified typicality masses (absent when symbolic).
#[derive(Clone, Debug, PartialEq)]
pub struct BlockChoice {
    pub n: BigInt,
    pub frequency: Option<f64>,
    pub pair: Option<f64>,
}

/// Smallest n_l ≥ 20·K_l on a doubling-then-bisect grid whose typicality
/// events both exceed 1 − 1/l.
pub fn choose_n(l: usize, prev: &[LevelParams], lambda: &XReal, lattice_k: &BigUint, profile: &Profile) -> Result<BlockChoice> {
    let pi = to_prob(&marginal_at_start(prev, 256)?);
    let lam = lambda.to_f64();
    if l == 1 {
        let n = profile.n1;
        let (f, p) = block_event_masses(&pi, lam, 1, n)?;
        return Ok(BlockChoice { n: BigInt::from(n), frequency: Some(f), pair: Some(p) });
    }
    let floor = BigInt::from(lattice_k * ROOM_FACTOR);
    let cap = profile.dp_cap.min(crate::markov::DP_CAP);
    let Some(n0) = floor.to_u64().filter(|&n| n <= cap) else {
        return Ok(BlockChoice { n: floor, frequency: None, pair: None });
    };
    let conf = confidence(l);
    let eval = |n: u64| -> Result<Option<(f64, f64)>> {
        let (f, p) = block_event_masses(&pi, lam, l, n)?;
        Ok((f > conf && p > conf).then_some((f, p)))
    };
    let mut lo = None;
    let mut hi = n0;
    let mut found = eval(hi)?;
    while found.is_none() {
        lo = Some(hi);
        hi = hi.saturating_mul(2);
        if hi > cap {
            return Err(Error::Infeasible {
                level: l,
                reason: format!("typicality confidences not reached below the DP cap {cap}"),
            });
        }
        found = eval(hi)?;
    }
    if let Some(mut lo) = lo {
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            match eval(mid)? {
                Some(v) => {
                    hi = mid;
                    found = Some(v);
                }
                None => lo = mid,
            }
        }
    }
    let (f, p) = found.expect("loop exits with a passing value");
    Ok(BlockChoice { n: BigInt::from(hi), frequency: Some(f), pair: Some(p) })
}

/// ε_l for the mixing conditions, at the level's working precision.
pub fn mixing_tolerance(big_n: &BigInt, profile: &Profile, bits: usize) -> Result<XReal> {
    match profile.mixing_tolerance {
        Some(e) => Ok(XReal::from_f64(e, bits)),
        None => inverse_power(3, &(big_n * 3), bits),
    }
}

/// δ_l for the failure bound, at the given precision.
pub fn failure_base(big_n: &BigInt, profile: &Profile, bits: usize) -> Result<XReal> {
    match profile.failure_base {
        Some(d) => Ok(XReal::from_f64(d, bits)),
        None => inverse_power(9, &(big_n * 3), bits),
    }
}

fn inverse_power(base: u32, exp: &BigInt, bits: usize) -> Result<XReal> {
    let e = exp.to_f64().unwrap_or(f64::INFINITY);
    if e * (base as f64).log2() > MAX_BITS as f64 {
        return Err(Error::PrecisionFloor(format!("{base}^(-{exp}) is beyond the supported range")));
    }
    let p = BigUint::from(base).pow(exp.to_u32().expect("bounded above"));
    Ok(XReal::one(bits) / XReal::from_biguint(&p, bits))
}

/// Smallest k with ‖π·Q^k − π_Q‖_∞ < ε.
pub(crate) fn marginal_settling_time<S: Scalar>(pi: &[S], q: &Matrix<S>, pi_q: &[S], eps: &S) -> Result<u64> {
    let mut v = pi.to_vec();
    for k in 0..=crate::markov::MIXING_SCAN_CAP {
        if sup_distance(&v, pi_q) < *eps {
            return Ok(k);
        }
        v = q.left_mul(&v);
    }
    Err(Error::NotMixing { cap: crate::markov::MIXING_SCAN_CAP as usize })
}

/// k_l = max(N_l + 1, relative mixing time of Q at ε_l, settling time of π_{N_l}).
pub fn choose_mixing_k(big_n: &BigInt, pi_at_n: &[XReal], profile: &Profile) -> Result<BigInt> {
    let floor: BigInt = big_n + 1;
    let (mix, settle) = match profile.mixing_tolerance {
        Some(eps) => {
            let q = golden_matrix();
            let pi: Vec<f64> = pi_at_n.iter().map(XReal::to_f64).collect();
            let mix = relative_mixing_time(&q, eps)?;
            let settle = marginal_settling_time(&pi, q.matrix(), golden_stationary().entries(), &eps)?;
            (mix, settle)
        }
        None => {
            let bits = pi_at_n[0].bits();
            let eps = mixing_tolerance(big_n, profile, bits)?;
            let q = perturbed_matrix_ext(&XReal::one(bits));
            let pi_q = golden_stationary_ext(bits);
            let mix = relative_mixing_time_ext(&q, &pi_q, &eps)?;
            let settle = marginal_settling_time(pi_at_n, &q, &pi_q, &eps)?;
            (mix, settle)
        }
    };
    Ok(floor.max(BigInt::from(mix)).max(BigInt::from(settle)))
}

/// Mantissa for the failure bound: enough to hold m exactly and to resolve δ.
fn failure_bits(big_n: &BigInt, profile: &Profile) -> Result<usize> {
    let b = match profile.failure_base {
        Some(_) => 256.0,
        None => 2.0 * 3.0 * big_n.to_f64().unwrap_or(f64::INFINITY) * 9f64.log2() + 256.0,
    };
    if b > MAX_BITS as f64 {
        return Err(Error::PrecisionFloor(format!("failure bound needs about {b:.3e} bits")));
    }
    Ok((b.ceil() as usize).div_ceil(64) * 64)
}

/// Lower bound on m from the failure condition: 4·k·ln l / (−ln(1 − δ)).
pub fn failure_lower_bound(l: usize, big_n: &BigInt, k: &BigInt, profile: &Profile) -> Result<BigInt> {
    if l <= 1 {
        return Ok(BigInt::zero());
    }
    let bits = failure_bits(big_n, profile)?.max(bits_of(k) + 128);
    let delta = failure_base(big_n, profile, bits)?;
    let rate = -(-delta).ln_1p()?;
    let ln_l = XReal::from_f64(l as f64, bits).ln()?;
    let bound = &(&big_to_x(&(k * 4), bits) * &ln_l) / &rate;
    Ok(bound.ceil_bigint())
}

/// λ_1 as an exact dyadic fraction.
pub(crate) fn lambda1_exact(profile: &Profile) -> BigRational {
    BigRational::from_float(profile.lambda1).expect("finite λ_1")
}

/// Lower bound on m from the growth condition: N + ⌈λ_1^{2N}⌉.
pub fn growth_lower_bound(l: usize, big_n: &BigInt, profile: &Profile) -> Result<BigInt> {
    let twice: BigInt = big_n * 2;
    let size = twice.to_f64().unwrap_or(f64::INFINITY) * profile.lambda1.log2();
    if size > MAX_INTEGER_BITS {
        return Err(Error::Infeasible {
            level: l,
            reason: format!("λ_1^(2·{big_n}) would need about {size:.3e} binary digits"),
        });
    }
    let e = twice.to_u32().expect("bounded by the size check");
    let r = lambda1_exact(profile);
    let num = r.numer().pow(e);
    let den = r.denom().pow(e);
    let (q, rem) = num.div_rem(&den);
    let ceil = if rem.is_zero() { q } else { q + 1 };
    Ok(big_n + ceil)
}

/// m_l: the base-case value at level 1, otherwise the larger of both bounds.
pub fn choose_m(l: usize, big_n: &BigInt, k: &BigInt, profile: &Profile) -> Result<BigInt> {
    if l == 1 {
        return Ok(BigInt::from(profile.m1));
    }
    let a = failure_lower_bound(l, big_n, k, profile)?;
    let b = growth_lower_bound(l, big_n, profile)?;
    Ok(a.max(b))
}

/// Rejects a level before any expensive work when its bounds cannot be
/// represented at all.
fn feasibility_wall(l: usize, prev: &[LevelParams], profile: &Profile) -> Result<()> {
    let Some(last) = prev.last() else { return Ok(()) };
    let m = last.big_m.to_f64().unwrap_or(f64::INFINITY);
    if profile.mixing_tolerance.is_none() && 3.0 * m * 3f64.log2() > MAX_BITS as f64 {
        return Err(Error::Infeasible {
            level: l,
            reason: format!("mixing tolerance 3^(-3N) with N > {m:.3e} needs more than {MAX_BITS} mantissa bits"),
        });
    }
    if 2.0 * m * profile.lambda1.log2() > MAX_INTEGER_BITS {
        return Err(Error::Infeasible {
            level: l,
            reason: format!("growth bound λ_1^(2N) with N > {m:.3e} exceeds {MAX_INTEGER_BITS:e} binary digits"),
        });
    }
    Ok(())
}

/// Runs one step of the induction.
pub fn build_level(l: usize, prev: &[LevelParams], profile: &Profile) -> Result<LevelParams> {
    feasibility_wall(l, prev, profile)?;
    let start = prev.last().map_or_else(|| profile.m0.clone(), |p| p.big_m.clone());
    let (lambda, lattice_k) = choose_lambda(l, prev, profile)?;
    let block = choose_n(l, prev, &lambda, &lattice_k, profile)?;
    let big_n = &start + &block.n;
    let bits = profile.working_bits(&big_n)?;
    let pi_start = marginal_at_start(prev, bits)?;
    let ql = perturbed_matrix_ext(&lambda.with_bits(bits));
    let pi_n = ql.pow(&block.n.to_biguint().expect("positive")).left_mul(&pi_start);
    let k_mix = choose_mixing_k(&big_n, &pi_n, profile)?;
    let m = choose_m(l, &big_n, &k_mix, profile)?;
    let big_m = &big_n + &m;
    let mut p_table = BTreeMap::new();
    for (k, p) in prev.iter().enumerate() {
        p_table.insert(k + 1, &lattice_k / &p.lattice_k);
    }
    p_table.insert(l, BigUint::one());
    let digits = (lambda.bits() as f64 * std::f64::consts::LOG10_2).ceil() as usize + 2;
    Ok(LevelParams {
        level: l,
        lambda: normalise_decimal(&lambda.to_decimal(digits)),
        lattice_k,
        start,
        n: block.n,
        big_n,
        k_mix,
        m,
        big_m,
        p_table,
        dp_frequency: block.frequency,
        dp_pair: block.pair,
        working_bits: bits,
    })
}

/// Turns `1.25e+0` into `1.25`, keeping other exponents as they are.
fn normalise_decimal(s: &str) -> String {
    s.strip_suffix("e+0").unwrap_or(s).to_string()
}

/// Runs the induction for `levels` levels and assembles the measure.
pub fn build_measure_spec(levels: usize, profile: &Profile) -> Result<(MeasureSpec, Vec<LevelParams>)> {
    profile.check()?;
    let mut params: Vec<LevelParams> = Vec::with_capacity(levels);
    for l in 1..=levels {
        let p = build_level(l, &params, profile)?;
        params.push(p);
    }
    let spec = measure_from_params(&params, profile)?;
    Ok((spec, params))
}

pub fn measure_from_params(params: &[LevelParams], profile: &Profile) -> Result<MeasureSpec> {
    let levels = params
        .iter()
        .map(|p| BlockLevel { lambda: p.lambda_f64(), start: p.start.clone(), mid: p.big_n.clone(), end: p.big_m.clone() })
        .collect();
    let tail = TailRule::Construction { approximation_cap: profile.approximation_cap };
    MeasureSpec::with_tail(BlockSchedule::new(levels)?, tail)
}

/// Sign-safe conversion of a non-negative big integer to `f64`.
pub(crate) fn approx(n: &BigInt) -> f64 {
    if n.is_negative() {
        -approx(&-n)
    } else {
        n.to_f64().unwrap_or(f64::INFINITY)
    }
}
