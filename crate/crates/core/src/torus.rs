//! The golden toral automorphism f(x, y) = ({x + y}, x), a three-set Markov
//! partition for it, and the coding map back from itineraries.
//!
//! Geometry lives in eigen-coordinates (s, t): s along the expanding
//! direction (a, b), t along the contracting direction (−b, a), where
//! a = φ/√(φ²+1) and b = 1/√(φ²+1). There f acts as (s, t) ↦ (φs, −t/φ).
//! The torus is tiled by the squares A = [0,a) × [−b, a−b) and
//! B = [a, a+b) × [a−2b, a−b); with this placement f(A) and f(B) cross A in
//! full-width strips. R_3 = B, R_2 = f(B) ⊂ A, and R_1 = A \ R_2.
//! Every rectangle is half-open, so each point has exactly one region.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::{cylinder_measure, golden_stationary, MeasureSpec, PHI};
use crate::tms::{enumerate_admissible, AdjacencyMatrix, Cylinder, Word};

/// Pieces thinner than this are numerical slivers along shared edges.
const SLIVER: f64 = 1e-12;
/// Default clearance an orbit must keep from every partition edge.
pub const BOUNDARY_MARGIN: f64 = 1e-9;
/// Deepest word length accepted by [`pushforward_check`].
pub const MAX_DEPTH: usize = 6;

fn sides() -> (f64, f64) {
    let c = 1.0 / (PHI * PHI + 1.0).sqrt();
    (PHI * c, c)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    pub x: f64,
    pub y: f64,
}

fn unit(v: f64) -> f64 {
    let r = v.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

impl TorusPoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x: unit(x), y: unit(y) }
    }

    /// Euclidean distance on the torus.
    pub fn distance(&self, o: &TorusPoint) -> f64 {
        let dx = (self.x - o.x).abs();
        let dy = (self.y - o.y).abs();
        dx.min(1.0 - dx).hypot(dy.min(1.0 - dy))
    }
}

pub fn apply_f(p: TorusPoint) -> TorusPoint {
    TorusPoint::new(p.x + p.y, p.x)
}

pub fn apply_f_inverse(p: TorusPoint) -> TorusPoint {
    TorusPoint::new(p.y, p.x - p.y)
}

fn to_st(x: f64, y: f64) -> (f64, f64) {
    let (a, b) = sides();
    (x * a + y * b, -x * b + y * a)
}

fn from_st(s: f64, t: f64) -> (f64, f64) {
    let (a, b) = sides();
    (s * a - t * b, s * b + t * a)
}

/// Half-open rectangle [s0, s1) × [t0, t1) in eigen-coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Rect {
    s0: f64,
    s1: f64,
    t0: f64,
    t1: f64,
}

impl Rect {
    fn area(&self) -> f64 {
        (self.s1 - self.s0) * (self.t1 - self.t0)
    }

    fn contains(&self, s: f64, t: f64) -> bool {
        self.s0 <= s && s < self.s1 && self.t0 <= t && t < self.t1
    }

    fn clearance(&self, s: f64, t: f64) -> f64 {
        (s - self.s0).min(self.s1 - s).min(t - self.t0).min(self.t1 - t)
    }

    fn meet(&self, o: &Rect) -> Option<Rect> {
        let r = Rect { s0: self.s0.max(o.s0), s1: self.s1.min(o.s1), t0: self.t0.max(o.t0), t1: self.t1.min(o.t1) };
        (r.s1 - r.s0 > SLIVER && r.t1 - r.t0 > SLIVER).then_some(r)
    }

    fn moved(&self, ds: f64, dt: f64) -> Rect {
        Rect { s0: self.s0 + ds, s1: self.s1 + ds, t0: self.t0 + dt, t1: self.t1 + dt }
    }

    /// Image under f, as a planar rectangle.
    fn forward(&self) -> Rect {
        Rect { s0: self.s0 * PHI, s1: self.s1 * PHI, t0: -self.t1 / PHI, t1: -self.t0 / PHI }
    }

    fn backward(&self) -> Rect {
        Rect { s0: self.s0 / PHI, s1: self.s1 / PHI, t0: -self.t1 * PHI, t1: -self.t0 * PHI }
    }

    /// `self` minus `o`, as up to four rectangles.
    fn minus(&self, o: &Rect) -> Vec<Rect> {
        let Some(cut) = self.meet(o) else { return vec![*self] };
        let pieces = [
            Rect { t1: cut.t0, ..*self },
            Rect { t0: cut.t1, ..*self },
            Rect { s1: cut.s0, t0: cut.t0, t1: cut.t1, ..*self },
            Rect { s0: cut.s1, t0: cut.t0, t1: cut.t1, ..*self },
        ];
        pieces.into_iter().filter(|r| r.s1 - r.s0 > SLIVER && r.t1 - r.t0 > SLIVER).collect()
    }
}

fn tiles() -> [Rect; 2] {
    let (a, b) = sides();
    [Rect { s0: 0.0, s1: a, t0: -b, t1: a - b }, Rect { s0: a, s1: a + b, t0: a - 2.0 * b, t1: a - b }]
}

/// Lattice translates (in eigen-coordinates) of the integer grid.
fn lattice(i: i32, j: i32) -> (f64, f64) {
    to_st(i as f64, j as f64)
}

const REACH: i32 = 4;

/// Cuts a planar rectangle into fundamental-domain pieces.
fn reduce(r: &Rect) -> Vec<Rect> {
    let mut out = Vec::new();
    for i in -REACH..=REACH {
        for j in -REACH..=REACH {
            let (ds, dt) = lattice(i, j);
            let m = r.moved(ds, dt);
            for tile in tiles() {
                if let Some(p) = m.meet(&tile) {
                    out.push(p);
                }
            }
        }
    }
    out
}

fn meet_all(xs: &[Rect], ys: &[Rect]) -> Vec<Rect> {
    xs.iter().flat_map(|x| ys.iter().filter_map(move |y| x.meet(y))).collect()
}

struct Partition {
    regions: [Vec<Rect>; 3],
}

fn partition() -> &'static Partition {
    static P: OnceLock<Partition> = OnceLock::new();
    P.get_or_init(|| {
        let [a, b] = tiles();
        let second = reduce(&b.forward());
        let mut first = vec![a];
        for cut in &second {
            first = first.iter().flat_map(|r| r.minus(cut)).collect();
        }
        Partition { regions: [first, second, vec![b]] }
    })
}

/// The fundamental-domain lift of `p`: tile index and eigen-coordinates.
fn locate(p: TorusPoint) -> (usize, f64, f64) {
    let tiles = tiles();
    let mut best = (0, 0.0, 0.0, f64::NEG_INFINITY);
    for i in -2..=2 {
        for j in -2..=2 {
            let (s, t) = to_st(p.x + i as f64, p.y + j as f64);
            for (k, tile) in tiles.iter().enumerate() {
                if tile.contains(s, t) {
                    return (k, s, t);
                }
                let c = tile.clearance(s, t);
                if c > best.3 {
                    best = (k, s, t, c);
                }
            }
        }
    }
    // only reachable through rounding on a tile edge
    (best.0, best.1, best.2)
}

/// Zero-based state of the region containing `p`.
pub fn region_of(p: TorusPoint) -> u8 {
    if locate(p).0 == 1 {
        return 2;
    }
    if locate(apply_f_inverse(p)).0 == 1 {
        1
    } else {
        0
    }
}

/// Distance from `p` and f⁻¹(p) to the edges that decide `region_of(p)`.
pub fn boundary_clearance(p: TorusPoint) -> f64 {
    let tiles = tiles();
    let (k, s, t) = locate(p);
    let (k2, s2, t2) = locate(apply_f_inverse(p));
    tiles[k].clearance(s, t).min(tiles[k2].clearance(s2, t2))
}

/// w_k = region_of(f^k(p)) for k ∈ [−n, n]; fails when the orbit passes
/// within `margin` of a partition edge.
pub fn itinerary(p: TorusPoint, n: usize, margin: f64) -> Result<Word> {
    let mut forward = Vec::with_capacity(n + 1);
    let mut q = p;
    for _ in 0..=n {
        forward.push(q);
        q = apply_f(q);
    }
    let mut backward = Vec::with_capacity(n);
    let mut q = p;
    for _ in 0..n {
        q = apply_f_inverse(q);
        backward.push(q);
    }
    let orbit: Vec<TorusPoint> = backward.into_iter().rev().chain(forward).collect();
    if let Some(bad) = orbit.iter().position(|q| boundary_clearance(*q) < margin) {
        return Err(Error::Numeric(format!("orbit point {} lies within {margin:e} of a partition edge", bad as i64 - n as i64)));
    }
    Word::new(orbit.into_iter().map(region_of).collect(), -num_bigint::BigInt::from(n))
}

fn piece_area(pieces: &[Rect]) -> f64 {
    pieces.iter().map(Rect::area).sum()
}

/// Pieces of ∩_k f^{−k} R_{w_k} for the symbols of `w` read from k = 0.
fn cell(symbols: &[u8]) -> Vec<Rect> {
    let regions = &partition().regions;
    let mut cur = regions[*symbols.last().expect("non-empty") as usize].clone();
    for &s in symbols.iter().rev().skip(1) {
        let pulled: Vec<Rect> = cur.iter().flat_map(|r| reduce(&r.backward())).collect();
        cur = meet_all(&regions[s as usize], &pulled);
    }
    cur
}

/// Lebesgue area of each region.
pub fn region_areas() -> [f64; 3] {
    let r = &partition().regions;
    [piece_area(&r[0]), piece_area(&r[1]), piece_area(&r[2])]
}

/// Area of R_w0 ∩ f^{−1} R_w1 ∩ ⋯ for a word read from coordinate 0.
pub fn cell_area(symbols: &[u8]) -> f64 {
    if symbols.is_empty() || symbols.iter().any(|&s| s > 2) {
        return 0.0;
    }
    piece_area(&cell(symbols))
}

/// A_{ij} = 1 iff R_i ∩ f^{−1}(R_j) has positive area.
pub fn markov_adjacency() -> Result<AdjacencyMatrix> {
    let rows = (0..3u8).map(|i| (0..3u8).map(|j| u8::from(cell_area(&[i, j]) > SLIVER)).collect()).collect();
    AdjacencyMatrix::new(rows)
}

/// A point of ∩_{k=−n}^{n} f^{−k} R_{w_k} and a bound on the cell's diameter.
///
/// The cell lies in a box of side a·φ^{−n} in both eigen-directions, so its
/// diameter is at most √2·a·φ^{−n}.
pub fn phi_approx(w: &Word) -> Result<(TorusPoint, f64)> {
    if w.len().is_multiple_of(2) || w.start != -num_bigint::BigInt::from(w.len() / 2) {
        return Err(Error::Input("phi_approx needs a word over a symmetric range [−n, n]".into()));
    }
    let n = w.len() / 2;
    let pieces = cell(&w.symbols);
    let best = pieces
        .iter()
        .max_by(|x, y| x.area().total_cmp(&y.area()))
        .ok_or_else(|| Error::EmptyCell(w.digits()))?;
    let (x, y) = from_st((best.s0 + best.s1) / 2.0, (best.t0 + best.t1) / 2.0);
    let mut p = TorusPoint::new(x, y);
    for _ in 0..n {
        p = apply_f(p);
    }
    let (a, _) = sides();
    let bound = std::f64::consts::SQRT_2 * a * PHI.powi(-(n as i32)) + 1e-12;
    Ok((p, bound))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellCheck {
    /// One-based digits of the word.
    pub word: String,
    pub area: f64,
    pub measure: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PushforwardReport {
    pub depth: usize,
    pub cells: Vec<CellCheck>,
    pub max_residual: f64,
}

/// Compares the area of every admissible cell of length ≤ `depth` with the
/// stationary Markov measure of the matching cylinder.
pub fn pushforward_check(depth: usize) -> Result<PushforwardReport> {
    if depth == 0 || depth > MAX_DEPTH {
        return Err(Error::Input(format!("depth must lie in 1..={MAX_DEPTH}")));
    }
    let adj = AdjacencyMatrix::golden_mean();
    let spec = MeasureSpec::stationary();
    let mut cells = Vec::new();
    let mut max_residual: f64 = 0.0;
    for len in 1..=depth {
        for w in enumerate_admissible(&adj, len, None, None)? {
            let area = cell_area(&w.symbols);
            let measure = cylinder_measure(&spec, &Cylinder::new(w.clone())).exp();
            max_residual = max_residual.max((area - measure).abs());
            cells.push(CellCheck { word: w.digits(), area, measure });
        }
    }
    Ok(PushforwardReport { depth, cells, max_residual })
}

/// Region outlines for export, in torus coordinates before reduction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionGeometry {
    /// One-based state.
    pub state: u8,
    pub area: f64,
    pub polygons: Vec<Vec<(f64, f64)>>,
}

pub fn region_geometry() -> Vec<RegionGeometry> {
    let stationary = golden_stationary();
    debug_assert!(region_areas().iter().zip(stationary.entries()).all(|(x, y)| (x - y).abs() < 1e-9));
    partition()
        .regions
        .iter()
        .enumerate()
        .map(|(i, pieces)| RegionGeometry {
            state: i as u8 + 1,
            area: piece_area(pieces),
            polygons: pieces
                .iter()
                .map(|r| [(r.s0, r.t0), (r.s1, r.t0), (r.s1, r.t1), (r.s0, r.t1)].iter().map(|&(s, t)| from_st(s, t)).collect())
                .collect(),
        })
        .collect()
}
