//! Small dense linear algebra over `f64` or [`XReal`].

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::xreal::XReal;

/// Field operations shared by `f64` and extended-precision reals.
pub trait Scalar: Clone + PartialOrd + std::fmt::Debug + Send + Sync {
    /// A constant at the same working precision as `self`.
    fn lift(&self, x: f64) -> Self;
    fn plus(&self, o: &Self) -> Self;
    fn minus(&self, o: &Self) -> Self;
    fn times(&self, o: &Self) -> Self;
    fn over(&self, o: &Self) -> Self;
    fn magnitude(&self) -> Self;
    fn approx(&self) -> f64;
}

impl Scalar for f64 {
    fn lift(&self, x: f64) -> Self {
        x
    }
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn minus(&self, o: &Self) -> Self {
        self - o
    }
    fn times(&self, o: &Self) -> Self {
        self * o
    }
    fn over(&self, o: &Self) -> Self {
        self / o
    }
    fn magnitude(&self) -> Self {
        self.abs()
    }
    fn approx(&self) -> f64 {
        *self
    }
}

impl Scalar for XReal {
    fn lift(&self, x: f64) -> Self {
        XReal::from_f64(x, self.bits())
    }
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn minus(&self, o: &Self) -> Self {
        self - o
    }
    fn times(&self, o: &Self) -> Self {
        self * o
    }
    fn over(&self, o: &Self) -> Self {
        self / o
    }
    fn magnitude(&self) -> Self {
        self.abs()
    }
    fn approx(&self) -> f64 {
        self.to_f64()
    }
}

/// Square matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<S> {
    n: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Input("matrix must be square and non-empty".into()));
        }
        Ok(Self { n, data: rows.into_iter().flatten().collect() })
    }

    pub fn identity_like(n: usize, proto: &S) -> Self {
        let data = (0..n * n)
            .map(|k| proto.lift(if k / n == k % n { 1.0 } else { 0.0 }))
            .collect();
        Self { n, data }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn map<T>(&self, f: impl Fn(&S) -> T) -> Matrix<T> {
        Matrix { n: self.n, data: self.data.iter().map(f).collect() }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let n = self.n;
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = self.get(i, 0).times(o.get(0, j));
                for k in 1..n {
                    acc = acc.plus(&self.get(i, k).times(o.get(k, j)));
                }
                data.push(acc);
            }
        }
        Self { n, data }
    }

    /// Row vector times matrix.
    pub fn left_mul(&self, v: &[S]) -> Vec<S> {
        (0..self.n)
            .map(|j| {
                let mut acc = v[0].times(self.get(0, j));
                for (k, vk) in v.iter().enumerate().skip(1) {
                    acc = acc.plus(&vk.times(self.get(k, j)));
                }
                acc
            })
            .collect()
    }

    /// `self^e` by repeated squaring; `e` may be astronomically large.
    pub fn pow(&self, e: &BigUint) -> Self {
        let mut result = Self::identity_like(self.n, &self.data[0]);
        if e.is_zero() {
            return result;
        }
        let mut base = self.clone();
        let bits = e.bits();
        for b in 0..bits {
            if e.bit(b) {
                result = result.mul(&base);
            }
            if b + 1 < bits {
                base = base.mul(&base);
            }
        }
        result
    }

    pub fn pow_u64(&self, e: u64) -> Self {
        self.pow(&BigUint::from(e))
    }

    pub fn max_abs_diff(&self, o: &Self) -> f64 {
        self.data
            .iter()
            .zip(&o.data)
            .map(|(a, b)| a.minus(b).magnitude().approx())
            .fold(0.0, f64::max)
    }
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve<S: Scalar>(a: &Matrix<S>, b: &[S]) -> Result<Vec<S>> {
    let n = a.size();
    let mut m: Vec<Vec<S>> = (0..n)
        .map(|i| {
            let mut r = a.row(i).to_vec();
            r.push(b[i].clone());
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| {
                m[x][col]
                    .magnitude()
                    .partial_cmp(&m[y][col].magnitude())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(col);
        if m[piv][col].magnitude().approx() == 0.0 && m[piv][col] == m[piv][col].lift(0.0) {
            return Err(Error::Numeric("singular linear system".into()));
        }
        m.swap(col, piv);
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = m[r][col].over(&m[col][col]);
            for c in col..=n {
                let d = factor.times(&m[col][c]);
                m[r][c] = m[r][c].minus(&d);
            }
        }
    }
    Ok((0..n).map(|i| m[i][n].over(&m[i][i])).collect())
}

/// Integer matrix power used for support patterns.
pub fn int_pow(a: &[Vec<u64>], e: u32) -> Vec<Vec<BigUint>> {
    let n = a.len();
    let mut r: Vec<Vec<BigUint>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { BigUint::one() } else { BigUint::zero() }).collect())
        .collect();
    for _ in 0..e {
        r = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| &r[i][k] * a[k][j]).sum())
                    .collect()
            })
            .collect();
    }
    r
}
