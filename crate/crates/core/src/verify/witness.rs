//! Good cylinders and the witness words that force the derivative onto a
//! prescribed lattice value.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::count_ones;
use crate::construction::LevelParams;
use crate::error::{Error, Result};
use crate::markov::{cylinder_measure, MatrixId, MeasureSpec, PHI};
use crate::tms::{bridge_concat, enumerate_admissible, is_admissible, symbols_admissible, AdjacencyMatrix, Cylinder, Word};

/// Longest prefix [0, M_{t−1}) enumerated by [`witness_submass`].
const PREFIX_CAP: usize = 16;

/// Level data needed to build witnesses for target level `j` at level `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessContext {
    pub level: usize,
    pub target: usize,
    /// p(j, t) = K_t / K_j.
    pub p: u64,
    /// M_{t−1}.
    pub start: u64,
    /// n_t.
    pub n: u64,
    pub lambda: f64,
    pub target_lambda: f64,
}

impl WitnessContext {
    pub fn new(params: &[LevelParams], t: usize, j: usize) -> Result<Self> {
        if j == 0 || j >= t || t > params.len() {
            return Err(Error::Input(format!("need 1 ≤ j < t ≤ {} (got j = {j}, t = {t})", params.len())));
        }
        let lv = &params[t - 1];
        let small = |x: &BigInt, what: &str| {
            x.to_u64().filter(|&v| v <= crate::markov::WINDOW_CAP).ok_or_else(|| Error::WindowCap { len: format!("{what} = {x}"), cap: crate::markov::WINDOW_CAP })
        };
        let p = lv.p_table.get(&j).and_then(|v| v.to_u64()).ok_or_else(|| Error::Input(format!("no p({j}, {t}) in the level table")))?;
        Ok(Self {
            level: t,
            target: j,
            p,
            start: small(&lv.start, "M")?,
            n: small(&lv.n, "n")?,
            lambda: lv.lambda_f64(),
            target_lambda: params[j - 1].lambda_f64(),
        })
    }

    /// N_t.
    pub fn end(&self) -> u64 {
        self.start + self.n
    }

    /// ln of λ_j(1+φ)/(1+φλ_j), the value the witness forces.
    pub fn log_target(&self) -> f64 {
        target_log(self.target_lambda)
    }

    /// ln of the factor produced by ΔL = ΔV = p at level t.
    pub fn log_forced(&self) -> f64 {
        self.p as f64 * target_log(self.lambda)
    }
}

fn target_log(lambda: f64) -> f64 {
    lambda.ln() + ((1.0 + PHI) / (1.0 + PHI * lambda)).ln()
}

/// Counts on the level-t block of a word covering [0, N_t].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoodBlock {
    pub ones: u64,
    pub double_ones: u64,
    /// #{k ∈ [M, N) : c_k = 2, c_{k+1} = 3}.
    pub rising_pairs: u64,
    pub good: bool,
}

fn rising_pairs(block: &[u8], n: usize) -> u64 {
    block[..=n].windows(2).take(n).filter(|w| w[0] == 1 && w[1] == 2).count() as u64
}

fn is_good(ones: u64, rising: u64, n: u64) -> bool {
    4 * ones > n && 2 * ones < n && 15 * rising >= n
}

/// L_t(c) ∈ (n_t/4, n_t/2) and at least n_t/15 rising (2,3) pairs.
pub fn good_cylinder(c: &Word, ctx: &WitnessContext) -> Result<GoodBlock> {
    let n = ctx.n as usize;
    let lo = BigInt::from(ctx.start);
    let block = super::word_slice(c, &lo, n + 1).ok_or_else(|| Error::Input(format!("word does not cover [{}, {}]", ctx.start, ctx.end())))?;
    let (ones, double_ones) = count_ones(block, n);
    let rising = rising_pairs(block, n);
    Ok(GoodBlock { ones, double_ones, rising_pairs: rising, good: is_good(ones, rising, ctx.n) })
}

/// Symbols on [M_{t−1}, N_t] (inclusive) following `prev` = c_{M−1}, with
/// exactly L + p ones and V + p double ones on the block.
///
/// Layout when L > V: optional "2", one run of V + p + 1 ones, L − V − 1
/// isolated "321" blocks, "32" padding, and a closing non-1 at N_t.
/// When L = V the only option is non-1 filler followed by a single run of
/// L + p ones reaching through N_t.
pub fn witness_tail(prev: u8, ones: u64, double_ones: u64, ctx: &WitnessContext) -> Result<Vec<u8>> {
    let n = ctx.n;
    let p = ctx.p;
    if double_ones > ones {
        return Err(Error::Input(format!("double ones {double_ones} exceed ones {ones}")));
    }
    let room = |needed: u64| Error::WitnessRoom { needed: needed.to_string(), available: n.to_string() };
    let mut out = Vec::with_capacity(n as usize + 1);
    if ones == double_ones {
        let run = ones + p;
        if run > n {
            return Err(room(run));
        }
        let fill = n - run;
        // non-1 filler alternates 3,2 and must end in 2 before the run
        let first = if prev == 2 { 1 } else { 2 };
        let ends_in_two = if fill == 0 { prev != 2 } else { (first == 1) == (fill % 2 == 1) };
        if !ends_in_two {
            return Err(room(run + 1));
        }
        let mut s = first;
        for _ in 0..fill {
            out.push(s);
            s = 3 - s;
        }
        out.extend(std::iter::repeat_n(0, run as usize + 1));
        return Ok(out);
    }
    let pre = u64::from(prev == 2);
    let gaps = ones - double_ones;
    let needed = pre + ones + p + 2 * gaps - 2;
    if needed > n {
        return Err(room(needed));
    }
    if pre == 1 {
        out.push(1);
    }
    out.extend(std::iter::repeat_n(0, (double_ones + p + 1) as usize));
    for _ in 1..gaps {
        out.extend([2, 1, 0]);
    }
    let mut s = 2;
    while (out.len() as u64) < n {
        out.push(s);
        s = 3 - s;
    }
    let last = *out.last().expect("the run is non-empty");
    out.push(if last == 2 { 1 } else { 2 });
    Ok(out)
}

/// d(b, c) on [−n_b, N_t]: b on the negative side, c up to M_{t−1}, then the
/// witness tail.
pub fn witness_word(b: &Cylinder, c: &Word, ctx: &WitnessContext) -> Result<Word> {
    let (lo, hi) = b.range();
    let adj = AdjacencyMatrix::golden_mean();
    let start = BigInt::from(ctx.start);
    if lo > BigInt::zero() || hi >= start {
        return Err(Error::Input(format!("cylinder [{lo}, {hi}] must straddle 0 and end before {start}")));
    }
    if c.start != BigInt::zero() || c.len() < ctx.n as usize + ctx.start as usize + 1 {
        return Err(Error::Input(format!("c must cover [0, {}]", ctx.end())));
    }
    let agree = (0..=hi.to_usize().expect("non-negative")).all(|i| b.word.at(&BigInt::from(i)) == Some(c.symbols[i]));
    if !agree || !is_admissible(c, &adj)? {
        return Err(Error::Input("c must be admissible and agree with b on [0, n]".into()));
    }
    let g = good_cylinder(c, ctx)?;
    if !g.good {
        return Err(Error::Input("c is not a good cylinder".into()));
    }
    let m = ctx.start as usize;
    let neg = (-&lo).to_usize().expect("non-negative");
    let mut symbols = b.word.symbols[..neg].to_vec();
    symbols.extend_from_slice(&c.symbols[..m]);
    symbols.extend(witness_tail(c.symbols[m - 1], g.ones, g.double_ones, ctx)?);
    debug_assert!(symbols_admissible(&symbols, &adj));
    Word::new(symbols, lo)
}

/// A short admissible word appended after a witness.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Marker {
    pub symbols: Vec<u8>,
}

impl Marker {
    pub fn new(symbols: Vec<u8>) -> Result<Self> {
        if symbols.is_empty() || !symbols_admissible(&symbols, &AdjacencyMatrix::golden_mean()) {
            return Err(Error::Input("marker must be a non-empty admissible word".into()));
        }
        Ok(Self { symbols })
    }
}

/// The witness followed by `marker`, with at most its last two symbols
/// rewritten to keep the join admissible. Returns the joined word and the
/// number of rewritten symbols.
pub fn marker_variant(d: &Word, marker: &Marker) -> Result<(Word, usize)> {
    let adj = AdjacencyMatrix::golden_mean();
    let right = Word::new(marker.symbols.clone(), d.end() + 1)?;
    let bridged = bridge_concat(d, &right, &adj)?;
    let mut symbols = bridged.word.symbols;
    symbols.extend_from_slice(&marker.symbols);
    Ok((Word::new(symbols, d.start.clone())?, bridged.changed))
}

/// Natural log of the mass of the witness sub-event at shift `shift`:
/// x ∈ b, x restricted to [0, N_t] is a good cylinder c, and
/// x on [shift − n_b, shift + N_t] equals d(b, c).
///
/// Sums over all prefixes c on [0, M_{t−1}) by enumeration, over the block by
/// a transfer DP on (L, V, rising pairs, state), and over the gap up to the
/// shifted copy with one matrix power. Returns −inf when nothing qualifies.
pub fn witness_submass(spec: &MeasureSpec, ctx: &WitnessContext, b: &Cylinder, shift: &BigInt) -> Result<f64> {
    let levels = spec.schedule().levels();
    if levels.len() != ctx.level {
        return Err(Error::Input(format!("spec has {} levels; the witness mass needs exactly {}", levels.len(), ctx.level)));
    }
    let (lo, hi) = b.range();
    let m = ctx.start as usize;
    let n = ctx.n as usize;
    let big_n = BigInt::from(ctx.end());
    if lo > BigInt::zero() || hi >= BigInt::from(m) || m > PREFIX_CAP {
        return Err(Error::Input(format!("cylinder [{lo}, {hi}] and prefix length {m} outside the supported range")));
    }
    let neg = (-&lo).to_usize().expect("non-negative");
    let copy_start = shift - neg;
    if copy_start <= big_n {
        return Err(Error::ShiftRange { shift: shift.to_string(), reason: "shifted copy overlaps the block".into() });
    }
    let copy_end = shift + &big_n;
    if spec.schedule().segments(&big_n, &copy_end).iter().any(|s| s.id != MatrixId::Base) {
        return Err(Error::ShiftRange { shift: shift.to_string(), reason: "shifted copy leaves the stationary stretch".into() });
    }

    let adj = AdjacencyMatrix::golden_mean();
    let q = spec.matrix(MatrixId::Base);
    let gap = (&copy_start - &big_n).to_biguint().expect("positive");
    let gap_matrix = q.matrix().pow(&gap);
    let entry = spec.matrix_at(&BigInt::from(m - 1));
    let block_matrix = spec.matrix(MatrixId::Level(ctx.level));

    let mut tables: [Option<BlockTable>; 3] = [None, None, None];
    let mut acc = f64::NEG_INFINITY;
    for w in enumerate_admissible(&adj, m, Some(b.word.symbols[neg]), None)? {
        if (0..=hi.to_usize().expect("non-negative")).any(|i| w.symbols[i] != b.word.symbols[neg + i]) {
            continue;
        }
        let mut full = b.word.symbols[..neg].to_vec();
        full.extend_from_slice(&w.symbols);
        let head = cylinder_measure(spec, &Cylinder::new(Word::new(full.clone(), lo.clone())?));
        if head == f64::NEG_INFINITY {
            continue;
        }
        let last = w.symbols[m - 1] as usize;
        let table = tables[last].get_or_insert_with(|| BlockTable::build(entry.row(last), block_matrix, n));
        for (&(ones, double_ones, end), &mass) in &table.cells {
            let Ok(tail) = witness_tail(last as u8, ones, double_ones, ctx) else { continue };
            let mut d = full.clone();
            d.extend(tail);
            let mut lp = head + mass.ln() + gap_matrix.get(end as usize, d[0] as usize).ln();
            for pair in d.windows(2) {
                lp += q.get(pair[0] as usize, pair[1] as usize).ln();
            }
            acc = log_add(acc, lp);
        }
    }
    Ok(acc)
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Probability mass of good blocks keyed by (L, V, c_N).
struct BlockTable {
    cells: std::collections::BTreeMap<(u64, u64, u8), f64>,
}

impl BlockTable {
    /// `entry` is the law of c_M; the block then runs with `p` for n steps.
    fn build(entry: &[f64], p: &crate::markov::StochasticMatrix, n: usize) -> Self {
        // L must stay below n/2, so larger counts are dropped as they appear
        let lmax = (n - 1) / 2;
        let rmax = n.div_ceil(15);
        let dims = [lmax + 1, lmax + 1, rmax + 1, 3];
        let idx = |l: usize, v: usize, r: usize, s: usize| ((l * dims[1] + v) * dims[2] + r) * 3 + s;
        let mut cur = vec![0.0f64; dims.iter().product()];
        for s in 0..3 {
            cur[idx(0, 0, 0, s)] = entry[s];
        }
        let mut next = vec![0.0f64; cur.len()];
        for _ in 0..n {
            next.iter_mut().for_each(|x| *x = 0.0);
            for l in 0..=lmax {
                for v in 0..=l {
                    for r in 0..=rmax {
                        for s in 0..3 {
                            let mass = cur[idx(l, v, r, s)];
                            if mass == 0.0 {
                                continue;
                            }
                            let l2 = l + usize::from(s == 0);
                            if l2 > lmax {
                                continue;
                            }
                            for t in 0..3 {
                                let w = p.get(s, t);
                                if w == 0.0 {
                                    continue;
                                }
                                let v2 = v + usize::from(s == 0 && t == 0);
                                let r2 = (r + usize::from(s == 1 && t == 2)).min(rmax);
                                next[idx(l2, v2, r2, t)] += mass * w;
                            }
                        }
                    }
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        let mut cells = std::collections::BTreeMap::new();
        for l in 0..=lmax {
            for v in 0..=l {
                for s in 0..3 {
                    let mass = cur[idx(l, v, rmax, s)];
                    if mass > 0.0 && is_good(l as u64, rmax as u64, n as u64) {
                        cells.insert((l as u64, v as u64, s as u8), mass);
                    }
                }
            }
        }
        Self { cells }
    }
}
