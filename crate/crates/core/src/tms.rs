//! Alphabets, adjacency matrices, admissible words and cylinders.
//!
//! States are stored 0-based and printed 1-based, so the word `"132"` holds
//! the states `[0, 2, 1]`.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::int_pow;

/// Default ceiling on the number of words [`enumerate_admissible`] will build.
pub const ENUMERATION_CAP: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    entries: Vec<Vec<u8>>,
}

impl AdjacencyMatrix {
    pub fn new(entries: Vec<Vec<u8>>) -> Result<Self> {
        let n = entries.len();
        if n == 0 || entries.iter().any(|r| r.len() != n) {
            return Err(Error::Input("adjacency matrix must be square and non-empty".into()));
        }
        if entries.iter().flatten().any(|&e| e > 1) {
            return Err(Error::Input("adjacency entries must be 0 or 1".into()));
        }
        for i in 0..n {
            if entries[i].iter().all(|&e| e == 0) {
                return Err(Error::Input(format!("state {} has no successor", i + 1)));
            }
            if (0..n).all(|r| entries[r][i] == 0) {
                return Err(Error::Input(format!("state {} has no predecessor", i + 1)));
            }
        }
        Ok(Self { entries })
    }

    /// The three-state golden-mean matrix with rows (1,0,1), (1,0,1), (0,1,0).
    pub fn golden_mean() -> Self {
        Self { entries: vec![vec![1, 0, 1], vec![1, 0, 1], vec![0, 1, 0]] }
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn allows(&self, s: u8, t: u8) -> bool {
        self.entries[s as usize][t as usize] == 1
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.entries
    }

    fn as_u64(&self) -> Vec<Vec<u64>> {
        self.entries.iter().map(|r| r.iter().map(|&e| e as u64).collect()).collect()
    }

    /// Entrywise `A^e` as exact counts.
    pub fn power_counts(&self, e: u32) -> Vec<Vec<BigUint>> {
        int_pow(&self.as_u64(), e)
    }

    fn check_symbol(&self, s: u8) -> Result<()> {
        if (s as usize) < self.size() {
            Ok(())
        } else {
            Err(Error::StateOutOfRange { state: s as usize + 1, size: self.size() })
        }
    }
}

/// A finite sequence of states anchored at an absolute coordinate.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Word {
    pub symbols: Vec<u8>,
    pub start: BigInt,
}

impl Word {
    pub fn new(symbols: Vec<u8>, start: BigInt) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::Input("word must contain at least one symbol".into()));
        }
        Ok(Self { symbols, start })
    }

    /// Parses 1-based digits such as `"132"`.
    pub fn parse(text: &str, start: BigInt) -> Result<Self> {
        let symbols = text
            .chars()
            .map(|c| match c.to_digit(10) {
                Some(d) if d >= 1 => Ok((d - 1) as u8),
                _ => Err(Error::Input(format!("bad state symbol {c:?} in {text:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(symbols, start)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Absolute coordinate of the last symbol.
    pub fn end(&self) -> BigInt {
        &self.start + (self.symbols.len() - 1)
    }

    /// Symbol at absolute coordinate `i`, if covered.
    pub fn at(&self, i: &BigInt) -> Option<u8> {
        let off = (i - &self.start).to_usize()?;
        self.symbols.get(off).copied()
    }

    pub fn shifted(&self, by: &BigInt) -> Self {
        Self { symbols: self.symbols.clone(), start: &self.start + by }
    }

    pub fn digits(&self) -> String {
        self.symbols.iter().map(|&s| char::from(b'1' + s)).collect()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.digits())
    }
}

/// The set of sequences agreeing with `word` on `[start, start + len − 1]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cylinder {
    pub word: Word,
}

impl Cylinder {
    pub fn new(word: Word) -> Self {
        Self { word }
    }

    pub fn parse(text: &str, start: i64) -> Result<Self> {
        Ok(Self { word: Word::parse(text, BigInt::from(start))? })
    }

    pub fn range(&self) -> (BigInt, BigInt) {
        (self.word.start.clone(), self.word.end())
    }

    pub fn len(&self) -> usize {
        self.word.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Serialize, Deserialize)]
struct CylinderRepr {
    word: String,
    start: String,
}

impl Serialize for Cylinder {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CylinderRepr { word: self.word.digits(), start: self.word.start.to_string() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Cylinder {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = CylinderRepr::deserialize(d)?;
        let start: BigInt = r.start.parse().map_err(serde::de::Error::custom)?;
        Word::parse(&r.word, start).map(Cylinder::new).map_err(serde::de::Error::custom)
    }
}

pub fn is_admissible(word: &Word, adj: &AdjacencyMatrix) -> Result<bool> {
    for &s in &word.symbols {
        adj.check_symbol(s)?;
    }
    Ok(symbols_admissible(&word.symbols, adj))
}

pub(crate) fn symbols_admissible(symbols: &[u8], adj: &AdjacencyMatrix) -> bool {
    symbols.windows(2).all(|p| adj.allows(p[0], p[1]))
}

/// Smallest `n` with `A^n` entrywise positive, searching up to the Wielandt
/// bound `(k−1)² + 1`, beyond which no primitive matrix can still have zeros.
pub fn mixing_index(adj: &AdjacencyMatrix) -> Option<usize> {
    let k = adj.size();
    mixing_index_capped(adj, (k - 1) * (k - 1) + 1).ok()
}

pub fn mixing_index_capped(adj: &AdjacencyMatrix, cap: usize) -> Result<usize> {
    let n = adj.size();
    let mut reach: Vec<Vec<bool>> = adj.rows().iter().map(|r| r.iter().map(|&e| e == 1).collect()).collect();
    for p in 1..=cap {
        if reach.iter().flatten().all(|&b| b) {
            return Ok(p);
        }
        reach = (0..n)
            .map(|i| (0..n).map(|j| (0..n).any(|k| reach[i][k] && adj.allows(k as u8, j as u8))).collect())
            .collect();
    }
    Err(Error::NotMixing { cap })
}

pub fn enumerate_admissible(
    adj: &AdjacencyMatrix,
    length: usize,
    first: Option<u8>,
    last: Option<u8>,
) -> Result<Vec<Word>> {
    enumerate_admissible_capped(adj, length, first, last, ENUMERATION_CAP)
}

pub fn enumerate_admissible_capped(
    adj: &AdjacencyMatrix,
    length: usize,
    first: Option<u8>,
    last: Option<u8>,
    cap: u64,
) -> Result<Vec<Word>> {
    if length == 0 {
        return Err(Error::Input("word length must be positive".into()));
    }
    for s in first.iter().chain(last.iter()) {
        adj.check_symbol(*s)?;
    }
    let n = adj.size();
    let counts = adj.power_counts((length - 1) as u32);
    let rows: Vec<usize> = first.map_or((0..n).collect(), |f| vec![f as usize]);
    let cols: Vec<usize> = last.map_or((0..n).collect(), |l| vec![l as usize]);
    let total: BigUint = rows.iter().flat_map(|&i| cols.iter().map(move |&j| (i, j))).map(|(i, j)| &counts[i][j]).sum();
    if total > BigUint::from(cap) {
        return Err(Error::EnumerationCap { estimate: total.to_string(), cap });
    }
    let mut out = Vec::with_capacity(total.to_usize().unwrap_or(0));
    let mut buf = Vec::with_capacity(length);
    for &s in &rows {
        buf.push(s as u8);
        extend(adj, length, last, &mut buf, &mut out);
        buf.pop();
    }
    Ok(out)
}

fn extend(adj: &AdjacencyMatrix, length: usize, last: Option<u8>, buf: &mut Vec<u8>, out: &mut Vec<Word>) {
    if buf.len() == length {
        if last.is_none_or(|l| buf[length - 1] == l) {
            out.push(Word { symbols: buf.clone(), start: BigInt::zero() });
        }
        return;
    }
    let tail = buf[buf.len() - 1];
    for t in 0..adj.size() as u8 {
        if adj.allows(tail, t) {
            buf.push(t);
            extend(adj, length, last, buf, out);
            buf.pop();
        }
    }
}

/// Outcome of [`bridge_concat`]: the adjusted left word and how many of its
/// symbols were rewritten.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bridge {
    pub word: Word,
    pub changed: usize,
}

/// Rewrites at most the last two symbols of `left` so that `left · right` is
/// admissible, preferring the fewest changes and then the smallest symbols.
pub fn bridge_concat(left: &Word, right: &Word, adj: &AdjacencyMatrix) -> Result<Bridge> {
    if !is_admissible(left, adj)? || !is_admissible(right, adj)? {
        return Err(Error::Input("bridge_concat needs admissible inputs".into()));
    }
    let head = right.symbols[0];
    let len = left.len();
    let free = len.min(2);
    let fixed = &left.symbols[..len - free];
    let k = adj.size() as u8;
    let mut best: Option<(usize, Vec<u8>)> = None;
    let mut tail = vec![0u8; free];
    loop {
        let mut candidate = fixed.to_vec();
        candidate.extend_from_slice(&tail);
        let joined_ok = adj.allows(candidate[len - 1], head)
            && symbols_admissible(&candidate[fixed.len().saturating_sub(1)..], adj);
        if joined_ok {
            let changed = candidate.iter().zip(&left.symbols).filter(|(a, b)| a != b).count();
            if best.as_ref().is_none_or(|(c, _)| changed < *c) {
                best = Some((changed, candidate));
            }
        }
        // odometer over the free suffix, lexicographic
        let mut i = free;
        loop {
            if i == 0 {
                let (changed, symbols) = best.ok_or(Error::NoBridge)?;
                return Ok(Bridge { word: Word { symbols, start: left.start.clone() }, changed });
            }
            i -= 1;
            tail[i] += 1;
            if tail[i] < k {
                break;
            }
            tail[i] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        Word::parse(s, BigInt::zero()).unwrap()
    }

    #[test]
    fn admissibility_of_small_words() {
        let a = AdjacencyMatrix::golden_mean();
        assert!(is_admissible(&w("132"), &a).unwrap());
        assert!(is_admissible(&w("2"), &a).unwrap());
        assert!(!is_admissible(&w("131"), &a).unwrap());
        assert!(matches!(is_admissible(&w("14"), &a), Err(Error::StateOutOfRange { state: 4, .. })));
    }

    #[test]
    fn rejects_dead_states_and_bad_entries() {
        assert!(AdjacencyMatrix::new(vec![vec![1, 0], vec![1, 0]]).is_err());
        assert!(AdjacencyMatrix::new(vec![vec![2]]).is_err());
    }

    #[test]
    fn mixing_indices() {
        assert_eq!(mixing_index(&AdjacencyMatrix::golden_mean()), Some(3));
        let ones = AdjacencyMatrix::new(vec![vec![1; 3]; 3]).unwrap();
        assert_eq!(mixing_index(&ones), Some(1));
        let cycle = AdjacencyMatrix::new(vec![vec![0, 1, 0], vec![0, 0, 1], vec![1, 0, 0]]).unwrap();
        assert_eq!(mixing_index(&cycle), None);
        assert_eq!(mixing_index_capped(&cycle, 50), Err(Error::NotMixing { cap: 50 }));
    }

    #[test]
    fn golden_square_has_zero_in_third_row() {
        let a2 = AdjacencyMatrix::golden_mean().power_counts(2);
        assert!(a2[2].iter().any(|c| c.is_zero()));
        let a3 = AdjacencyMatrix::golden_mean().power_counts(3);
        assert!(a3.iter().flatten().all(|c| !c.is_zero()));
    }

    #[test]
    fn enumeration_examples() {
        let a = AdjacencyMatrix::golden_mean();
        assert_eq!(enumerate_admissible(&a, 3, None, None).unwrap().len(), 8);
        assert_eq!(enumerate_admissible(&a, 1, None, None).unwrap().len(), 3);
        let from3 = enumerate_admissible(&a, 2, Some(2), None).unwrap();
        assert_eq!(from3.iter().map(Word::digits).collect::<Vec<_>>(), vec!["32"]);
        let words = enumerate_admissible(&a, 5, None, None).unwrap();
        let mut sorted = words.clone();
        sorted.sort_by(|x, y| x.symbols.cmp(&y.symbols));
        assert_eq!(words, sorted);
        assert!(matches!(
            enumerate_admissible_capped(&a, 40, None, None, 1000),
            Err(Error::EnumerationCap { .. })
        ));
    }

    #[test]
    fn bridge_examples() {
        let a = AdjacencyMatrix::golden_mean();
        let b = bridge_concat(&w("1321"), &w("32"), &a).unwrap();
        assert_eq!((b.word.digits().as_str(), b.changed), ("1321", 0));
        let b = bridge_concat(&w("1321"), &w("21"), &a).unwrap();
        assert!(b.word.digits().ends_with('3'));
        assert!(b.changed >= 1 && b.changed <= 2);
        let mut joined = b.word.symbols.clone();
        joined.extend([1, 0]);
        assert!(symbols_admissible(&joined, &a));
    }

    #[test]
    fn bridge_fails_when_no_suffix_works() {
        // state 2 is only reachable from itself
        let a = AdjacencyMatrix::new(vec![vec![1, 0, 1], vec![0, 1, 0], vec![1, 0, 1]]).unwrap();
        assert_eq!(bridge_concat(&w("111"), &w("2"), &a), Err(Error::NoBridge));
        assert_eq!(bridge_concat(&w("11"), &w("2"), &a).unwrap().changed, 2);
    }

    #[test]
    fn cylinder_serializes_with_decimal_start() {
        let c = Cylinder::parse("132", -4).unwrap();
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(json, r#"{"word":"132","start":"-4"}"#);
        let back: Cylinder = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
        assert_eq!(c.range(), (BigInt::from(-4), BigInt::from(-2)));
    }
}
