//! Exact sampling of finite windows of an inhomogeneous Markov measure.

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::schedule::{propagate_marginal, MatrixId, MeasureSpec};
use super::{ProbVector, StochasticMatrix};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::tms::Word;

/// Longest window a single call will sample.
pub const WINDOW_CAP: u64 = 10_000_000;

pub(crate) fn draw<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> u8 {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last = i;
            if u < w {
                return i as u8;
            }
            u -= w;
        }
    }
    last as u8
}

/// Draws coordinates `k..=l` from the measure; identical seeds give identical words.
pub fn sample_window(spec: &MeasureSpec, k: &BigInt, l: &BigInt, seed: u64) -> Result<Word> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_window_with(spec, k, l, &mut rng)
}

pub fn sample_window_with<R: Rng + ?Sized>(spec: &MeasureSpec, k: &BigInt, l: &BigInt, rng: &mut R) -> Result<Word> {
    let len = check_window(k, l)?;
    let first = draw(propagate_marginal(spec, k).entries(), rng);
    continue_window(spec, k, len, first, rng)
}

fn check_window(k: &BigInt, l: &BigInt) -> Result<usize> {
    if l < k {
        return Err(Error::Input("window end precedes its start".into()));
    }
    let len = (l - k) + 1u32;
    match len.to_u64() {
        Some(n) if n <= WINDOW_CAP => Ok(n as usize),
        _ => Err(Error::WindowCap { len: len.to_string(), cap: WINDOW_CAP }),
    }
}

/// Extends a known first symbol at `k` to a window of `len` coordinates.
pub(crate) fn continue_window<R: Rng + ?Sized>(
    spec: &MeasureSpec,
    k: &BigInt,
    len: usize,
    first: u8,
    rng: &mut R,
) -> Result<Word> {
    let mut symbols = Vec::with_capacity(len);
    symbols.push(first);
    let end = k + (len - 1);
    for seg in spec.schedule().segments(k, &end) {
        let m = spec.matrix(seg.id);
        let n = seg.len.to_usize().expect("bounded by the window cap");
        for _ in 0..n {
            let cur = *symbols.last().expect("non-empty") as usize;
            symbols.push(draw(m.row(cur), rng));
        }
    }
    Word::new(symbols, k.clone())
}

/// Disjoint windows sampled jointly; gaps are integrated out exactly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseWord {
    pub windows: Vec<Word>,
}

impl SparseWord {
    /// Symbol at coordinate `i` if some window covers it.
    pub fn at(&self, i: &BigInt) -> Option<u8> {
        self.windows.iter().find_map(|w| w.at(i))
    }

    /// Contiguous symbols on `start .. start + len` if one window covers them.
    pub fn slice(&self, start: &BigInt, len: usize) -> Option<&[u8]> {
        self.windows.iter().find_map(|w| word_slice(w, start, len))
    }
}

pub(crate) fn word_slice<'a>(w: &'a Word, start: &BigInt, len: usize) -> Option<&'a [u8]> {
    let off = (start - &w.start).to_usize()?;
    w.symbols.get(off..off.checked_add(len)?)
}

/// Precomputed transition data for repeatedly sampling the same windows.
#[derive(Clone, Debug)]
pub struct SparsePlan {
    starts: Vec<BigInt>,
    lens: Vec<usize>,
    first: ProbVector,
    /// Per window: the matrix index used at each offset.
    steps: Vec<Vec<usize>>,
    /// Per window after the first: the bridge from the previous window's end.
    bridges: Vec<Matrix<f64>>,
    matrices: Vec<StochasticMatrix>,
}

impl SparsePlan {
    /// Windows `(start, len)` must be increasing and disjoint.
    pub fn new(spec: &MeasureSpec, windows: &[(BigInt, usize)]) -> Result<Self> {
        let mut matrices: Vec<StochasticMatrix> = Vec::new();
        let mut ids: Vec<MatrixId> = Vec::new();
        let mut index_of = |id: MatrixId, matrices: &mut Vec<StochasticMatrix>| -> usize {
            if let Some(i) = ids.iter().position(|x| *x == id) {
                return i;
            }
            ids.push(id);
            matrices.push(spec.matrix(id).clone());
            ids.len() - 1
        };
        let mut steps = Vec::new();
        let mut bridges = Vec::new();
        let mut prev_end: Option<BigInt> = None;
        for (start, len) in windows {
            if *len == 0 || *len as u64 > WINDOW_CAP {
                return Err(Error::WindowCap { len: len.to_string(), cap: WINDOW_CAP });
            }
            if let Some(pe) = &prev_end {
                if start <= pe {
                    return Err(Error::Input("sparse windows must be increasing and disjoint".into()));
                }
                bridges.push(spec.transition_product(pe, start));
            }
            let end = start + (len - 1);
            let mut w = Vec::with_capacity(len - 1);
            for seg in spec.schedule().segments(start, &end) {
                let i = index_of(seg.id, &mut matrices);
                let n = seg.len.to_usize().expect("bounded by the window cap");
                w.extend(std::iter::repeat_n(i, n));
            }
            steps.push(w);
            prev_end = Some(end);
        }
        let first = windows.first().map_or_else(|| spec.base_marginal().clone(), |(s, _)| propagate_marginal(spec, s));
        Ok(Self { starts: windows.iter().map(|w| w.0.clone()).collect(), lens: windows.iter().map(|w| w.1).collect(), first, steps, bridges, matrices })
    }

    /// Draws all windows; `prefix` pins the leading symbols of the first
    /// window, which then conditions everything after it.
    pub fn sample<R: Rng + ?Sized>(&self, prefix: &[u8], rng: &mut R) -> Result<SparseWord> {
        let mut out = Vec::with_capacity(self.starts.len());
        for (w, start) in self.starts.iter().enumerate() {
            let len = self.lens[w];
            let mut symbols = Vec::with_capacity(len);
            if w == 0 {
                if prefix.len() > len {
                    return Err(Error::Input("prefix longer than the first window".into()));
                }
                symbols.extend_from_slice(prefix);
                if symbols.is_empty() {
                    symbols.push(draw(self.first.entries(), rng));
                }
            } else {
                let prev: &Word = &out[w - 1];
                let s = *prev.symbols.last().expect("non-empty") as usize;
                symbols.push(draw(self.bridges[w - 1].row(s), rng));
            }
            while symbols.len() < len {
                let at = symbols.len() - 1;
                let cur = symbols[at] as usize;
                let m = &self.matrices[self.steps[w][at]];
                symbols.push(draw(m.row(cur), rng));
            }
            out.push(Word { symbols, start: start.clone() });
        }
        Ok(SparseWord { windows: out })
    }
}

/// Samples windows `(start, len)` listed in increasing, non-overlapping order.
pub fn sample_sparse<R: Rng + ?Sized>(spec: &MeasureSpec, windows: &[(BigInt, usize)], rng: &mut R) -> Result<SparseWord> {
    SparsePlan::new(spec, windows)?.sample(&[], rng)
}
