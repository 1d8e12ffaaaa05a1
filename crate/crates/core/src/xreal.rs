//! Extended-precision reals backed by `astro_float::BigFloat`.
//!
//! Every value carries its own mantissa width in bits; binary operations run
//! at the wider of the two operands.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use astro_float::{BigFloat, Consts, Radix, RoundingMode, Sign};
use num_bigint::{BigInt, BigUint};
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};

const RM: RoundingMode = RoundingMode::ToEven;

/// Smallest mantissa accepted anywhere.
pub const MIN_BITS: usize = 64;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("constants cache"));
}

fn with_consts<T>(f: impl FnOnce(&mut Consts) -> T) -> T {
    CONSTS.with(|c| f(&mut c.borrow_mut()))
}

fn round_bits(bits: usize) -> usize {
    bits.max(MIN_BITS).div_ceil(64) * 64
}

#[derive(Clone)]
pub struct XReal {
    value: BigFloat,
    bits: usize,
}

impl XReal {
    fn wrap(value: BigFloat, bits: usize) -> Result<Self> {
        if value.is_nan() {
            return Err(Error::Numeric("extended-precision result is NaN".into()));
        }
        Ok(Self { value, bits })
    }

    fn wrap_ok(value: BigFloat, bits: usize) -> Self {
        Self { value, bits }
    }

    pub fn from_f64(x: f64, bits: usize) -> Self {
        let bits = round_bits(bits);
        Self::wrap_ok(BigFloat::from_f64(x, bits), bits)
    }

    pub fn zero(bits: usize) -> Self {
        Self::from_f64(0.0, bits)
    }

    pub fn one(bits: usize) -> Self {
        Self::from_f64(1.0, bits)
    }

    pub fn from_biguint(n: &BigUint, bits: usize) -> Self {
        let bits = round_bits(bits);
        if n.is_zero() {
            return Self::zero(bits);
        }
        let words = n.to_u64_digits();
        let e = 64 * words.len() as i32;
        let mut v = BigFloat::from_words(&words, Sign::Pos, e);
        v.set_precision(bits, RM).expect("precision");
        Self::wrap_ok(v, bits)
    }

    pub fn from_bigint(n: &BigInt, bits: usize) -> Self {
        let mag = Self::from_biguint(n.magnitude(), bits);
        if n.is_negative() {
            -mag
        } else {
            mag
        }
    }

    /// Parses a decimal literal such as `"1.5"` or `"3e-20"`.
    pub fn parse(s: &str, bits: usize) -> Result<Self> {
        let bits = round_bits(bits);
        let v = with_consts(|cc| BigFloat::parse(s.trim(), Radix::Dec, bits, RM, cc));
        if v.is_nan() {
            return Err(Error::Input(format!("not a decimal number: {s:?}")));
        }
        Ok(Self::wrap_ok(v, bits))
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    /// Re-rounds to a different mantissa width.
    pub fn with_bits(&self, bits: usize) -> Self {
        let bits = round_bits(bits);
        let mut v = self.value.clone();
        v.set_precision(bits, RM).expect("precision");
        Self::wrap_ok(v, bits)
    }

    fn joint(&self, other: &Self) -> usize {
        self.bits.max(other.bits)
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        !self.is_zero() && self.value.is_negative()
    }

    pub fn abs(&self) -> Self {
        if self.is_negative() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    pub fn ln(&self) -> Result<Self> {
        if self.is_negative() || self.is_zero() {
            return Err(Error::Numeric("logarithm of a non-positive value".into()));
        }
        let v = with_consts(|cc| self.value.ln(self.bits, RM, cc));
        Self::wrap(v, self.bits)
    }

    pub fn exp(&self) -> Result<Self> {
        let v = with_consts(|cc| self.value.exp(self.bits, RM, cc));
        if v.is_inf() {
            return Err(Error::Numeric("exponential overflow".into()));
        }
        Self::wrap(v, self.bits)
    }

    pub fn sqrt(&self) -> Result<Self> {
        if self.is_negative() {
            return Err(Error::Numeric("square root of a negative value".into()));
        }
        Self::wrap(self.value.sqrt(self.bits, RM), self.bits)
    }

    /// e^x − 1 without cancellation for small |x|.
    pub fn exp_m1(&self) -> Result<Self> {
        if self.log2_abs() > -8.0 {
            return Ok(self.exp()? - XReal::one(self.bits));
        }
        let tol = self.log2_abs() - self.bits as f64 - 8.0;
        let mut term = self.clone();
        let mut sum = self.clone();
        let mut k = 1u32;
        while term.log2_abs() > tol {
            k += 1;
            term = &(&term * self) / &XReal::from_f64(k as f64, self.bits);
            sum = &sum + &term;
        }
        Ok(sum)
    }

    /// ln(1 + x) without cancellation for small |x|.
    pub fn ln_1p(&self) -> Result<Self> {
        if self.log2_abs() > -8.0 {
            return (XReal::one(self.bits) + self).ln();
        }
        let tol = self.log2_abs() - self.bits as f64 - 8.0;
        let mut power = self.clone();
        let mut sum = self.clone();
        let mut k = 1u32;
        loop {
            k += 1;
            power = -(&power * self);
            let term = &power / &XReal::from_f64(k as f64, self.bits);
            if term.log2_abs() < tol {
                return Ok(sum);
            }
            sum = &sum + &term;
        }
    }

    pub fn powi(&self, n: usize) -> Self {
        Self::wrap_ok(self.value.powi(n, self.bits, RM), self.bits)
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    /// Nearest `f64`; saturates to ±inf or 0 outside the double range.
    pub fn to_f64(&self) -> f64 {
        if self.value.is_inf() {
            return if self.value.is_negative() { f64::NEG_INFINITY } else { f64::INFINITY };
        }
        let Some((words, _, sign, e, _)) = self.value.as_raw_parts() else {
            return f64::NAN;
        };
        if self.value.is_zero() || words.is_empty() {
            return 0.0;
        }
        let n = words.len();
        let hi = words[n - 1] as f64;
        let lo = if n > 1 { words[n - 2] as f64 } else { 0.0 };
        let mant = (hi + lo / 18446744073709551616.0) / 18446744073709551616.0;
        let mag = scale2(mant, e as i64);
        if sign == Sign::Neg {
            -mag
        } else {
            mag
        }
    }

    /// Base-2 logarithm of |x| as a double, usable far outside the `f64` range.
    pub fn log2_abs(&self) -> f64 {
        let Some((words, _, _, e, _)) = self.value.as_raw_parts() else {
            return f64::NAN;
        };
        if self.value.is_zero() || words.is_empty() {
            return f64::NEG_INFINITY;
        }
        let hi = words[words.len() - 1] as f64 / 18446744073709551616.0;
        hi.log2() + e as f64
    }

    /// Smallest integer ≥ x, as a big integer.
    pub fn ceil_bigint(&self) -> BigInt {
        self.integral(true)
    }

    /// Largest integer ≤ x, as a big integer.
    pub fn floor_bigint(&self) -> BigInt {
        self.integral(false)
    }

    fn integral(&self, up: bool) -> BigInt {
        let r = if up { self.value.ceil() } else { self.value.floor() };
        let Some((words, _, sign, e, _)) = r.as_raw_parts() else {
            return BigInt::zero();
        };
        if r.is_zero() || words.is_empty() {
            return BigInt::zero();
        }
        let m = BigUint::from_slice(
            &words.iter().flat_map(|w| [*w as u32, (*w >> 32) as u32]).collect::<Vec<_>>(),
        );
        let shift = e as i64 - 64 * words.len() as i64;
        let mag = if shift >= 0 { m << shift as usize } else { m >> (-shift) as usize };
        if sign == Sign::Neg {
            -BigInt::from(mag)
        } else {
            BigInt::from(mag)
        }
    }

    /// Decimal rendering with `digits` significant digits.
    pub fn to_decimal(&self, digits: usize) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let p = round_bits(((digits as f64) * std::f64::consts::LOG2_10).ceil() as usize + 8);
        let mut v = self.value.clone();
        v.set_precision(p.min(self.bits.max(64)), RM).expect("precision");
        with_consts(|cc| v.format(Radix::Dec, RM, cc)).unwrap_or_else(|_| format!("{}", self.to_f64()))
    }
}

fn scale2(m: f64, e: i64) -> f64 {
    if e > 2000 {
        return f64::INFINITY;
    }
    if e < -2000 {
        return 0.0;
    }
    let mut v = m;
    let mut e = e;
    while e > 1000 {
        v *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        v *= 2f64.powi(-1000);
        e += 1000;
    }
    v * 2f64.powi(e as i32)
}

impl fmt::Debug for XReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "XReal({}; {} bits)", self.to_decimal(20), self.bits)
    }
}

impl fmt::Display for XReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal(20))
    }
}

impl PartialEq for XReal {
    fn eq(&self, other: &Self) -> bool {
        self.partial_cmp(other) == Some(Ordering::Equal)
    }
}

impl PartialOrd for XReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.value.cmp(&other.value).map(|c| c.cmp(&0))
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident) => {
        impl $tr<&XReal> for &XReal {
            type Output = XReal;
            fn $m(self, rhs: &XReal) -> XReal {
                let p = self.joint(rhs);
                XReal::wrap_ok(self.value.$m(&rhs.value, p, RM), p)
            }
        }
        impl $tr<XReal> for XReal {
            type Output = XReal;
            fn $m(self, rhs: XReal) -> XReal {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&XReal> for XReal {
            type Output = XReal;
            fn $m(self, rhs: &XReal) -> XReal {
                (&self).$m(rhs)
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl Neg for XReal {
    type Output = XReal;
    fn neg(self) -> XReal {
        let bits = self.bits;
        XReal::wrap_ok(self.value.neg(), bits)
    }
}
