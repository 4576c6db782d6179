//! Uniform cubical grids over rectangular domains and sets of grid boxes.
//!
//! A [`CubicalGrid`] subdivides a rectangle in `R^m` into axis-aligned boxes
//! addressed either by an `m`-tuple of per-axis indices or by a flat index
//! ([`BoxId`]). A [`CubicalSet`] is a bitset of boxes on one grid and carries
//! the set algebra, collar (dilation) and connected-component operations the
//! rest of the crate is built on.
//!
//! Box membership uses the half-open convention `[low, high)` per axis, except
//! that the top face of the whole domain is closed, so every point of the
//! domain lies in exactly one box.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::sync::Arc;

use bitvec::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("degenerate domain on axis {axis}: lower {lower} >= upper {upper}")]
    DegenerateDomain { axis: usize, lower: f64, upper: f64 },
    #[error("subdivision count on axis {axis} must be >= 1")]
    EmptySubdivision { axis: usize },
    #[error("dimension mismatch: grid is {expected}-dimensional, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("sets live on different grids")]
    GridMismatch,
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Flat index of a grid box; round-trips with the per-axis index tuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BoxId(pub usize);

/// Uniform subdivision of a rectangle `[lower, upper] ⊂ R^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicalGrid {
    lower: Vec<f64>,
    upper: Vec<f64>,
    subdivisions: Vec<usize>,
    widths: Vec<f64>,
}

impl CubicalGrid {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, subdivisions: Vec<usize>) -> Result<Self, GridError> {
        assert_eq!(lower.len(), upper.len());
        assert_eq!(lower.len(), subdivisions.len());
        for axis in 0..lower.len() {
            if !(lower[axis] < upper[axis]) {
                return Err(GridError::DegenerateDomain {
                    axis,
                    lower: lower[axis],
                    upper: upper[axis],
                });
            }
            if subdivisions[axis] == 0 {
                return Err(GridError::EmptySubdivision { axis });
            }
        }
        let widths = (0..lower.len())
            .map(|i| (upper[i] - lower[i]) / subdivisions[i] as f64)
            .collect();
        Ok(Self { lower, upper, subdivisions, widths })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn subdivisions(&self) -> &[usize] {
        &self.subdivisions
    }

    /// Per-axis box widths, strictly positive.
    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    /// Largest per-axis box width.
    pub fn max_width(&self) -> f64 {
        self.widths.iter().cloned().fold(0.0, f64::max)
    }

    pub fn box_count(&self) -> usize {
        self.subdivisions.iter().product()
    }

    /// Flat index from per-axis indices (axis 0 varies fastest).
    pub fn from_multi(&self, multi: &[usize]) -> BoxId {
        debug_assert_eq!(multi.len(), self.dim());
        let mut flat = 0usize;
        for axis in (0..self.dim()).rev() {
            debug_assert!(multi[axis] < self.subdivisions[axis]);
            flat = flat * self.subdivisions[axis] + multi[axis];
        }
        BoxId(flat)
    }

    pub fn to_multi(&self, id: BoxId) -> Vec<usize> {
        debug_assert!(id.0 < self.box_count());
        let mut rest = id.0;
        let mut multi = Vec::with_capacity(self.dim());
        for axis in 0..self.dim() {
            multi.push(rest % self.subdivisions[axis]);
            rest /= self.subdivisions[axis];
        }
        multi
    }

    /// Box containing `p`, or `None` if `p` lies outside the domain.
    ///
    /// Half-open `[low, high)` per axis; the top face of the domain is closed.
    pub fn box_of_point(&self, p: &[f64]) -> Option<BoxId> {
        debug_assert_eq!(p.len(), self.dim());
        let mut multi = Vec::with_capacity(self.dim());
        for axis in 0..self.dim() {
            if !p[axis].is_finite() || p[axis] < self.lower[axis] || p[axis] > self.upper[axis] {
                return None;
            }
            let mut idx = ((p[axis] - self.lower[axis]) / self.widths[axis]).floor() as usize;
            if idx >= self.subdivisions[axis] {
                idx = self.subdivisions[axis] - 1; // top-face closure
            }
            multi.push(idx);
        }
        Some(self.from_multi(&multi))
    }

    pub fn box_center(&self, id: BoxId) -> Vec<f64> {
        let multi = self.to_multi(id);
        (0..self.dim())
            .map(|a| self.lower[a] + (multi[a] as f64 + 0.5) * self.widths[a])
            .collect()
    }

    /// Lower and upper corners of a box.
    pub fn box_bounds(&self, id: BoxId) -> (Vec<f64>, Vec<f64>) {
        let multi = self.to_multi(id);
        let lo: Vec<f64> = (0..self.dim())
            .map(|a| self.lower[a] + multi[a] as f64 * self.widths[a])
            .collect();
        let hi: Vec<f64> = (0..self.dim())
            .map(|a| self.lower[a] + (multi[a] + 1) as f64 * self.widths[a])
            .collect();
        (lo, hi)
    }

    /// Euclidean distance from a point to a box (0 if the point is inside).
    pub fn distance_to_box(&self, id: BoxId, p: &[f64]) -> f64 {
        let (lo, hi) = self.box_bounds(id);
        let mut sq = 0.0;
        for a in 0..self.dim() {
            let d = (lo[a] - p[a]).max(0.0).max(p[a] - hi[a]);
            sq += d * d;
        }
        sq.sqrt()
    }

    /// Distance from an interior point to the domain boundary.
    pub fn distance_to_domain_boundary(&self, p: &[f64]) -> f64 {
        let mut d = f64::INFINITY;
        for a in 0..self.dim() {
            d = d.min(p[a] - self.lower[a]).min(self.upper[a] - p[a]);
        }
        d.max(0.0)
    }

    /// Face-adjacent neighbors (2m of them, clipped at the domain boundary).
    pub fn face_neighbors(&self, id: BoxId) -> Vec<BoxId> {
        let multi = self.to_multi(id);
        let mut out = Vec::with_capacity(2 * self.dim());
        for a in 0..self.dim() {
            if multi[a] > 0 {
                let mut m = multi.clone();
                m[a] -= 1;
                out.push(self.from_multi(&m));
            }
            if multi[a] + 1 < self.subdivisions[a] {
                let mut m = multi.clone();
                m[a] += 1;
                out.push(self.from_multi(&m));
            }
        }
        out
    }

    /// Face-or-corner (Moore) neighbors, clipped at the domain boundary.
    pub fn moore_neighbors(&self, id: BoxId) -> Vec<BoxId> {
        let multi = self.to_multi(id);
        let dim = self.dim();
        let mut out = Vec::new();
        let mut offset = vec![-1i64; dim];
        loop {
            if offset.iter().any(|&o| o != 0) {
                let mut m = Vec::with_capacity(dim);
                let mut ok = true;
                for a in 0..dim {
                    let v = multi[a] as i64 + offset[a];
                    if v < 0 || v >= self.subdivisions[a] as i64 {
                        ok = false;
                        break;
                    }
                    m.push(v as usize);
                }
                if ok {
                    out.push(self.from_multi(&m));
                }
            }
            // odometer over {-1,0,1}^m
            let mut carry = true;
            for slot in offset.iter_mut() {
                if carry {
                    *slot += 1;
                    if *slot > 1 {
                        *slot = -1;
                    } else {
                        carry = false;
                    }
                }
            }
            if carry {
                break;
            }
        }
        out
    }
}

/// A set of boxes on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicalSet {
    grid: Arc<CubicalGrid>,
    bits: BitVec<u64, Lsb0>,
}

impl CubicalSet {
    pub fn empty(grid: Arc<CubicalGrid>) -> Self {
        let bits = bitvec![u64, Lsb0; 0; grid.box_count()];
        Self { grid, bits }
    }

    pub fn full(grid: Arc<CubicalGrid>) -> Self {
        let bits = bitvec![u64, Lsb0; 1; grid.box_count()];
        Self { grid, bits }
    }

    pub fn from_boxes<I: IntoIterator<Item = BoxId>>(grid: Arc<CubicalGrid>, boxes: I) -> Self {
        let mut s = Self::empty(grid);
        for b in boxes {
            s.insert(b);
        }
        s
    }

    /// Boxes whose closed region satisfies `pred` at, or within distance of,
    /// the predicate's own test; the caller decides via box bounds.
    pub fn from_predicate(grid: Arc<CubicalGrid>, mut pred: impl FnMut(&CubicalGrid, BoxId) -> bool) -> Self {
        let mut s = Self::empty(grid.clone());
        for i in 0..grid.box_count() {
            if pred(&grid, BoxId(i)) {
                s.bits.set(i, true);
            }
        }
        s
    }

    pub fn grid(&self) -> &Arc<CubicalGrid> {
        &self.grid
    }

    pub fn insert(&mut self, id: BoxId) {
        self.bits.set(id.0, true);
    }

    pub fn remove(&mut self, id: BoxId) {
        self.bits.set(id.0, false);
    }

    pub fn contains(&self, id: BoxId) -> bool {
        self.bits[id.0]
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.not_any()
    }

    pub fn iter(&self) -> impl Iterator<Item = BoxId> + '_ {
        self.bits.iter_ones().map(BoxId)
    }

    fn check_grid(&self, other: &Self) {
        assert!(Arc::ptr_eq(&self.grid, &other.grid) || self.grid == other.grid, "sets live on different grids");
    }

    pub fn union(&self, other: &Self) -> Self {
        self.check_grid(other);
        let mut bits = self.bits.clone();
        bits |= &other.bits;
        Self { grid: self.grid.clone(), bits }
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.check_grid(other);
        let mut bits = self.bits.clone();
        bits &= &other.bits;
        Self { grid: self.grid.clone(), bits }
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.check_grid(other);
        let mut bits = self.bits.clone();
        for i in other.bits.iter_ones() {
            bits.set(i, false);
        }
        Self { grid: self.grid.clone(), bits }
    }

    pub fn complement(&self) -> Self {
        let mut bits = self.bits.clone();
        let len = bits.len();
        bits = !bits;
        bits.truncate(len);
        Self { grid: self.grid.clone(), bits }
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.check_grid(other);
        self.bits.iter_ones().all(|i| other.bits[i])
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.check_grid(other);
        self.bits.iter_ones().all(|i| !other.bits[i])
    }

    /// Moore dilation by `rings` rings, clipped at the domain boundary.
    pub fn collar(&self, rings: usize) -> Self {
        let mut current = self.clone();
        for _ in 0..rings {
            let mut next = current.clone();
            for b in current.iter() {
                for n in self.grid.moore_neighbors(b) {
                    next.insert(n);
                }
            }
            current = next;
        }
        current
    }

    /// Boxes of the set removed by one step of Moore erosion's complement:
    /// members with at least one face neighbor outside the set (or on the
    /// domain boundary counts as interior here; only in-set adjacency is
    /// inspected). Used for fast point-to-set distances.
    pub fn face_boundary(&self) -> Vec<BoxId> {
        self.iter()
            .filter(|&b| {
                let nbrs = self.grid.face_neighbors(b);
                nbrs.len() < 2 * self.grid.dim() || nbrs.iter().any(|n| !self.contains(*n))
            })
            .collect()
    }

    /// Partition into face-adjacency connected components.
    pub fn connected_components(&self) -> Vec<CubicalSet> {
        self.components_by(|g, b| g.face_neighbors(b))
    }

    /// Partition into face-or-corner components. Two boxes lie in one Moore
    /// component exactly when their closed cell complexes are connected.
    pub fn moore_components(&self) -> Vec<CubicalSet> {
        self.components_by(|g, b| g.moore_neighbors(b))
    }

    fn components_by(&self, neighbors: impl Fn(&CubicalGrid, BoxId) -> Vec<BoxId>) -> Vec<CubicalSet> {
        let mut seen = bitvec![u64, Lsb0; 0; self.grid.box_count()];
        let mut out = Vec::new();
        for start in self.iter() {
            if seen[start.0] {
                continue;
            }
            let mut comp = CubicalSet::empty(self.grid.clone());
            let mut stack = vec![start];
            seen.set(start.0, true);
            while let Some(b) = stack.pop() {
                comp.insert(b);
                for n in neighbors(&self.grid, b) {
                    if self.contains(n) && !seen[n.0] {
                        seen.set(n.0, true);
                        stack.push(n);
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    /// Text serialization: a `grid:` header followed by a run-length-encoded
    /// bit string (`<bit>x<count>` tokens). Round-trips exactly.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<(), GridError> {
        let mut header = String::from("grid:");
        for v in self.grid.lower() {
            write!(header, " {v}").unwrap();
        }
        for v in self.grid.upper() {
            write!(header, " {v}").unwrap();
        }
        for v in self.grid.subdivisions() {
            write!(header, " {v}").unwrap();
        }
        writeln!(w, "{header}")?;
        writeln!(w, "{}", rle_encode(&self.bits))?;
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self, GridError> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| GridError::Parse { line: 1, message: "missing grid header".into() })??;
        let grid = Arc::new(parse_grid_header(&header, 1)?);
        let body = lines
            .next()
            .ok_or_else(|| GridError::Parse { line: 2, message: "missing bit string".into() })??;
        let bits = rle_decode(&body, grid.box_count(), 2)?;
        Ok(Self { grid, bits })
    }
}

pub(crate) fn parse_grid_header(header: &str, line: usize) -> Result<CubicalGrid, GridError> {
    let rest = header
        .strip_prefix("grid:")
        .ok_or_else(|| GridError::Parse { line, message: "expected `grid:` header".into() })?;
    let toks: Vec<&str> = rest.split_whitespace().collect();
    if toks.len() % 3 != 0 || toks.is_empty() {
        return Err(GridError::Parse { line, message: format!("expected 3m grid tokens, got {}", toks.len()) });
    }
    let m = toks.len() / 3;
    let parse_f = |s: &str| -> Result<f64, GridError> {
        s.parse().map_err(|_| GridError::Parse { line, message: format!("bad float `{s}`") })
    };
    let parse_u = |s: &str| -> Result<usize, GridError> {
        s.parse().map_err(|_| GridError::Parse { line, message: format!("bad integer `{s}`") })
    };
    let lower = toks[..m].iter().map(|s| parse_f(s)).collect::<Result<Vec<_>, _>>()?;
    let upper = toks[m..2 * m].iter().map(|s| parse_f(s)).collect::<Result<Vec<_>, _>>()?;
    let subs = toks[2 * m..].iter().map(|s| parse_u(s)).collect::<Result<Vec<_>, _>>()?;
    CubicalGrid::new(lower, upper, subs)
}

pub(crate) fn grid_header(grid: &CubicalGrid) -> String {
    let mut header = String::from("grid:");
    for v in grid.lower() {
        write!(header, " {v}").unwrap();
    }
    for v in grid.upper() {
        write!(header, " {v}").unwrap();
    }
    for v in grid.subdivisions() {
        write!(header, " {v}").unwrap();
    }
    header
}

fn rle_encode(bits: &BitVec<u64, Lsb0>) -> String {
    let mut out = String::new();
    let mut i = 0;
    while i < bits.len() {
        let bit = bits[i];
        let mut run = 1;
        while i + run < bits.len() && bits[i + run] == bit {
            run += 1;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        write!(out, "{}x{}", if bit { 1 } else { 0 }, run).unwrap();
        i += run;
    }
    if out.is_empty() {
        out.push_str("0x0");
    }
    out
}

fn rle_decode(s: &str, expected: usize, line: usize) -> Result<BitVec<u64, Lsb0>, GridError> {
    let mut bits = BitVec::with_capacity(expected);
    for tok in s.split_whitespace() {
        let (bit, count) = tok
            .split_once('x')
            .ok_or_else(|| GridError::Parse { line, message: format!("bad run token `{tok}`") })?;
        let bit = match bit {
            "0" => false,
            "1" => true,
            _ => return Err(GridError::Parse { line, message: format!("bad bit `{bit}`") }),
        };
        let count: usize = count
            .parse()
            .map_err(|_| GridError::Parse { line, message: format!("bad run length `{count}`") })?;
        for _ in 0..count {
            bits.push(bit);
        }
    }
    if bits.len() != expected {
        return Err(GridError::Parse {
            line,
            message: format!("bit string has {} entries, grid has {} boxes", bits.len(), expected),
        });
    }
    Ok(bits)
}
