//! Relative cubical homology over a field, critical groups of Morse sets,
//! Morse type numbers and the Morse inequalities.
//!
//! A cubical set is viewed as the closed cell complex of its boxes (vertices,
//! edges, faces, ...). Relative pairs drop the subcomplex cells; ranks come
//! from a lowest-row column reduction of the boundary matrices, bit-exact over
//! Z/2 and with exact fractions over the rationals. Betti numbers follow from
//! `rank H_q = #cells_q - rank ∂_q - rank ∂_{q+1}`.
//!
//! Quotient critical groups collapse each Morse set to its own point. That is
//! computed from the relative pair plus an exact degree-0/1 correction for the
//! difference between collapsing disjoint pieces to separate points and to a
//! single point (each extra identification of two points either merges two
//! path components or wedges on a circle).

use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::grid::{BoxId, CubicalSet};
use crate::morse::{MorseFiltration, MorseGraph};
use crate::outer::OuterMap;

#[derive(Debug, Error)]
pub enum HomologyError {
    #[error("subcomplex is not contained in the complex")]
    PairNotNested,
    #[error("neighborhood W_{k} is not forward invariant: box {box_id} escapes")]
    InvarianceViolated { k: usize, box_id: usize },
    #[error("collar of Morse set {k} collides with W_{km1}; use a deeper grid")]
    CollarCollision { k: usize, km1: usize },
    #[error("Morse-set collars overlap; use a deeper grid")]
    CollarOverlap,
    #[error("index {k} out of range 1..={l}")]
    IndexOutOfRange { k: usize, l: usize },
}

/// Coefficient field for homology ranks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HomologyField {
    /// Z/2, bit-exact. The default.
    Z2,
    /// Exact rational arithmetic.
    Rational,
}

impl std::fmt::Display for HomologyField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Z2 => write!(f, "Z/2"),
            Self::Rational => write!(f, "Q"),
        }
    }
}

/// Homology ranks by degree `q = 0..=m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BettiVector {
    pub ranks: Vec<usize>,
    pub field: HomologyField,
}

impl BettiVector {
    pub fn euler(&self) -> i64 {
        self.ranks
            .iter()
            .enumerate()
            .map(|(q, &r)| if q % 2 == 0 { r as i64 } else { -(r as i64) })
            .sum()
    }
}

/// Critical groups (plain and quotient) per Morse set.
#[derive(Debug, Clone, Serialize)]
pub struct CriticalGroupTable {
    pub field: HomologyField,
    pub groups: Vec<BettiVector>,
    pub quotient: Vec<BettiVector>,
}

// A cell of the grid complex: per-axis vertex coordinate, plus a bitmask of
// the axes along which the cell extends one unit.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Cell {
    coords: Vec<u16>,
    extent: u16,
}

impl Cell {
    fn dim(&self) -> usize {
        self.extent.count_ones() as usize
    }
}

/// The relative chain complex of a pair of cubical sets.
pub struct CubicalChainComplex {
    dim: usize,
    /// Relative cell counts by degree.
    cell_counts: Vec<usize>,
    /// For each degree q >= 1: per q-cell, its (q-1)-faces as (row, sign).
    boundaries: Vec<Vec<Vec<(u32, i8)>>>,
}

fn cells_of_set(set: &CubicalSet) -> HashMap<Cell, ()> {
    let grid = set.grid();
    let m = grid.dim();
    let mut cells = HashMap::new();
    let mut choice = vec![0u8; m]; // 0: lower vertex, 1: interval, 2: upper vertex
    for b in set.iter() {
        let multi = grid.to_multi(b);
        choice.fill(0);
        loop {
            let mut coords = Vec::with_capacity(m);
            let mut extent = 0u16;
            for a in 0..m {
                match choice[a] {
                    0 => coords.push(multi[a] as u16),
                    1 => {
                        coords.push(multi[a] as u16);
                        extent |= 1 << a;
                    }
                    _ => coords.push(multi[a] as u16 + 1),
                }
            }
            cells.insert(Cell { coords, extent }, ());
            let mut carry = true;
            for slot in choice.iter_mut() {
                if carry {
                    *slot += 1;
                    if *slot == 3 {
                        *slot = 0;
                    } else {
                        carry = false;
                    }
                }
            }
            if carry {
                break;
            }
        }
    }
    cells
}

impl CubicalChainComplex {
    /// Build the relative complex of `(x, a)`; `a` may be empty.
    pub fn build(x: &CubicalSet, a: &CubicalSet) -> Result<Self, HomologyError> {
        if !a.is_subset(x) {
            return Err(HomologyError::PairNotNested);
        }
        let m = x.grid().dim();
        let x_cells = cells_of_set(x);
        let a_cells = cells_of_set(a);

        // index the relative cells by degree
        let mut index: Vec<HashMap<&Cell, u32>> = vec![HashMap::new(); m + 1];
        for cell in x_cells.keys() {
            if !a_cells.contains_key(cell) {
                let q = cell.dim();
                let next = index[q].len() as u32;
                index[q].insert(cell, next);
            }
        }
        let cell_counts: Vec<usize> = index.iter().map(|i| i.len()).collect();

        // boundaries with orientation signs; faces inside `a` are dropped
        let mut boundaries: Vec<Vec<Vec<(u32, i8)>>> = Vec::with_capacity(m);
        for q in 1..=m {
            let mut cols: Vec<Vec<(u32, i8)>> = vec![Vec::new(); cell_counts[q]];
            for (&cell, &col) in &index[q] {
                let mut faces = Vec::with_capacity(2 * q);
                let mut before = 0u32;
                for axis in 0..m {
                    if cell.extent & (1 << axis) == 0 {
                        continue;
                    }
                    let sign = if before % 2 == 0 { 1i8 } else { -1i8 };
                    for (upper, s) in [(false, -sign), (true, sign)] {
                        let mut face = cell.clone();
                        face.extent &= !(1 << axis);
                        if upper {
                            face.coords[axis] += 1;
                        }
                        if let Some(&row) = index[q - 1].get(&face) {
                            faces.push((row, s));
                        }
                    }
                    before += 1;
                }
                faces.sort_unstable_by_key(|&(r, _)| r);
                cols[col as usize] = faces;
            }
            boundaries.push(cols);
        }

        let complex = Self { dim: m, cell_counts, boundaries };
        complex.assert_boundary_squares_to_zero();
        Ok(complex)
    }

    pub fn cell_counts(&self) -> &[usize] {
        &self.cell_counts
    }

    fn boundary(&self, q: usize) -> &[Vec<(u32, i8)>] {
        &self.boundaries[q - 1]
    }

    /// `∂_{q-1} ∘ ∂_q = 0` over the integers, hence over any field.
    fn assert_boundary_squares_to_zero(&self) {
        for q in 2..=self.dim {
            for col in self.boundary(q) {
                let mut acc: HashMap<u32, i64> = HashMap::new();
                for &(face, s1) in col {
                    for &(ff, s2) in &self.boundary(q - 1)[face as usize] {
                        *acc.entry(ff).or_insert(0) += s1 as i64 * s2 as i64;
                    }
                }
                assert!(acc.values().all(|&v| v == 0), "boundary of boundary is nonzero");
            }
        }
    }

    fn rank_z2(&self, q: usize) -> usize {
        let nrows = self.cell_counts[q - 1];
        let mut owner: Vec<u32> = vec![u32::MAX; nrows];
        let mut stored: Vec<Vec<u32>> = Vec::new();
        let mut rank = 0;
        for col_entries in self.boundary(q) {
            let mut col: Vec<u32> = col_entries.iter().map(|&(r, _)| r).collect();
            // over Z/2 the two faces of a degenerate pair would cancel, but
            // cubical faces are distinct rows, so the column is already reduced
            loop {
                let Some(&low) = col.last() else { break };
                let own = owner[low as usize];
                if own == u32::MAX {
                    owner[low as usize] = stored.len() as u32;
                    stored.push(col);
                    rank += 1;
                    break;
                }
                col = symdiff(&col, &stored[own as usize]);
            }
        }
        rank
    }

    fn rank_rational(&self, q: usize) -> usize {
        type Col = Vec<(u32, BigRational)>;
        let nrows = self.cell_counts[q - 1];
        let mut owner: Vec<u32> = vec![u32::MAX; nrows];
        let mut stored: Vec<Col> = Vec::new();
        let mut rank = 0;
        for col_entries in self.boundary(q) {
            let mut col: Col = col_entries
                .iter()
                .map(|&(r, s)| (r, BigRational::from_integer(s.into())))
                .collect();
            loop {
                let Some((low, lead)) = col.last().cloned() else { break };
                debug_assert!(!lead.is_zero());
                let own = owner[low as usize];
                if own == u32::MAX {
                    owner[low as usize] = stored.len() as u32;
                    stored.push(col);
                    rank += 1;
                    break;
                }
                let pivot = &stored[own as usize];
                let factor = &lead / &pivot.last().unwrap().1;
                col = sub_scaled(&col, pivot, &factor);
            }
        }
        rank
    }

    fn rank(&self, q: usize, field: HomologyField) -> usize {
        match field {
            HomologyField::Z2 => self.rank_z2(q),
            HomologyField::Rational => self.rank_rational(q),
        }
    }

    /// Betti numbers of the relative pair; checks the Euler-Poincaré identity.
    pub fn betti(&self, field: HomologyField) -> BettiVector {
        let m = self.dim;
        let mut boundary_ranks = vec![0usize; m + 2];
        for q in 1..=m {
            boundary_ranks[q] = self.rank(q, field);
        }
        let ranks: Vec<usize> = (0..=m)
            .map(|q| self.cell_counts[q] - boundary_ranks[q] - boundary_ranks[q + 1])
            .collect();
        let alt_cells: i64 = (0..=m)
            .map(|q| if q % 2 == 0 { self.cell_counts[q] as i64 } else { -(self.cell_counts[q] as i64) })
            .sum();
        let alt_ranks: i64 = ranks
            .iter()
            .enumerate()
            .map(|(q, &r)| if q % 2 == 0 { r as i64 } else { -(r as i64) })
            .sum();
        assert_eq!(alt_cells, alt_ranks, "Euler-Poincare identity violated");
        BettiVector { ranks, field }
    }
}

fn symdiff(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

fn sub_scaled(
    a: &[(u32, BigRational)],
    b: &[(u32, BigRational)],
    factor: &BigRational,
) -> Vec<(u32, BigRational)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => {
                out.push(a[i].clone());
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push((b[j].0, -factor * &b[j].1));
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                let v = &a[i].1 - factor * &b[j].1;
                if !v.is_zero() {
                    out.push((a[i].0, v));
                }
                i += 1;
                j += 1;
            }
        }
    }
    out.extend(a[i..].iter().cloned());
    out.extend(b[j..].iter().map(|(r, v)| (*r, -factor * v)));
    out
}

/// Relative Betti numbers of the pair `(x, a)`; `betti(x, ∅)` is absolute.
pub fn betti(x: &CubicalSet, a: &CubicalSet, field: HomologyField) -> Result<BettiVector, HomologyError> {
    Ok(CubicalChainComplex::build(x, a)?.betti(field))
}

/// Euler number of the pair, with the Euler-Poincaré identity asserted inside.
pub fn euler(x: &CubicalSet, a: &CubicalSet, field: HomologyField) -> Result<i64, HomologyError> {
    Ok(betti(x, a, field)?.euler())
}

fn check_invariance(map: &OuterMap, set: &CubicalSet, k: usize) -> Result<(), HomologyError> {
    for b in set.iter() {
        if map.exits(b) || map.image(b).iter().any(|&t| !set.contains(BoxId(t as usize))) {
            return Err(HomologyError::InvarianceViolated { k, box_id: b.0 });
        }
    }
    Ok(())
}

/// Critical groups of the k-th Morse set from the positively invariant pair
/// `(W_k, W_{k-1})`.
pub fn critical_groups(
    map: &OuterMap,
    filt: &MorseFiltration,
    k: usize,
    field: HomologyField,
) -> Result<BettiVector, HomologyError> {
    let l = filt.len();
    if k == 0 || k > l {
        return Err(HomologyError::IndexOutOfRange { k, l });
    }
    let wk = filt.neighborhood(k);
    check_invariance(map, wk, k)?;
    let wkm1 = if k == 1 {
        CubicalSet::empty(wk.grid().clone())
    } else {
        check_invariance(map, filt.neighborhood(k - 1), k - 1)?;
        filt.neighborhood(k - 1).clone()
    };
    if !wkm1.is_subset(wk) {
        return Err(HomologyError::PairNotNested);
    }
    betti(wk, &wkm1, field)
}

/// Betti ranks of `X` with each listed piece collapsed to its own point
/// (reduced homology). Pieces must be nonempty subsets of `x` whose closed
/// cell complexes are pairwise disjoint, i.e. the box sets may not even touch
/// at corners.
///
/// Computed as the relative pair `(X, ∪ pieces)` plus the exact degree-0/1
/// correction for splitting the single collapsed point back into one point per
/// piece: each extra identification either merges two path components of the
/// collapsed space or wedges on a circle. Path components of `X` are Moore
/// components (cell-level connectivity), not face components.
fn collapsed_betti(x: &CubicalSet, pieces: &[&CubicalSet], field: HomologyField) -> Result<Vec<usize>, HomologyError> {
    assert!(!pieces.is_empty());
    let mut union = CubicalSet::empty(x.grid().clone());
    for (i, p) in pieces.iter().enumerate() {
        assert!(!p.is_empty(), "collapsed piece {i} is empty");
        if !union.collar(1).is_disjoint(p) {
            return Err(HomologyError::CollarOverlap);
        }
        union = union.union(p);
    }
    let pair = betti(x, &union, field)?;

    // union-find over components of X plus one node per piece
    let comps = x.moore_components();
    let n_nodes = comps.len() + pieces.len();
    let mut parent: Vec<usize> = (0..n_nodes).collect();
    fn find(parent: &mut Vec<usize>, mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for (pi, p) in pieces.iter().enumerate() {
        for (ci, c) in comps.iter().enumerate() {
            if !c.is_disjoint(p) {
                let a = find(&mut parent, comps.len() + pi);
                let b = find(&mut parent, ci);
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }
    let mut merges = 0usize;
    let mut cycles = 0usize;
    for pi in 1..pieces.len() {
        let a = find(&mut parent, comps.len());
        let b = find(&mut parent, comps.len() + pi);
        if a == b {
            cycles += 1;
        } else {
            parent[a] = b;
            merges += 1;
        }
    }

    let mut ranks = pair.ranks;
    ranks[0] += merges;
    assert!(ranks.len() < 2 || ranks[1] >= cycles, "collapse correction underflow");
    if ranks.len() > 1 {
        ranks[1] -= cycles;
    }
    Ok(ranks)
}

/// Quotient critical groups: the k-th Morse set is collapsed to a point.
///
/// Uses `N(M_k) = collar(M_k, 1) ∩ W_k` as the collapsed stand-in for the
/// Morse set. When the collar touches `W_{k-1}` (the gap is only a box or
/// two), `W_{k-1}` is shrunk away from the collar and re-trimmed to forward
/// invariance; any positively invariant neighborhood of `A_{k-1}` is
/// admissible, so this changes nothing but the representative.
pub fn quotient_critical_groups(
    map: &OuterMap,
    graph: &MorseGraph,
    filt: &MorseFiltration,
    k: usize,
    field: HomologyField,
) -> Result<BettiVector, HomologyError> {
    let l = filt.len();
    if k == 0 || k > l {
        return Err(HomologyError::IndexOutOfRange { k, l });
    }
    let wk = filt.neighborhood(k);
    check_invariance(map, wk, k)?;
    let n_k = graph.components()[k - 1].collar(1).intersection(wk);
    let mut ranks;
    if k == 1 {
        ranks = collapsed_betti(wk, &[&n_k], field)?;
        ranks[0] += 1; // absolute homology of the collapsed space
    } else {
        let mut wkm1 = filt.neighborhood(k - 1).clone();
        if !n_k.collar(1).is_disjoint(&wkm1) {
            wkm1 = crate::morse::forward_invariant_trim(map, &wkm1.difference(&n_k.collar(1)));
            if !filt.attractor(k - 1).is_subset(&wkm1) {
                return Err(HomologyError::CollarCollision { k, km1: k - 1 });
            }
        }
        ranks = collapsed_betti(wk, &[&wkm1, &n_k], field)?;
    }
    Ok(BettiVector { ranks, field })
}

/// Full table of plain and quotient critical groups.
pub fn critical_group_table(
    map: &OuterMap,
    graph: &MorseGraph,
    filt: &MorseFiltration,
    field: HomologyField,
) -> Result<CriticalGroupTable, HomologyError> {
    let mut groups = Vec::with_capacity(filt.len());
    let mut quotient = Vec::with_capacity(filt.len());
    for k in 1..=filt.len() {
        groups.push(critical_groups(map, filt, k, field)?);
        quotient.push(quotient_critical_groups(map, graph, filt, k, field)?);
    }
    Ok(CriticalGroupTable { field, groups, quotient })
}

/// Morse type numbers: componentwise sums of critical-group ranks.
pub fn morse_numbers(groups: &[BettiVector]) -> Vec<usize> {
    if groups.is_empty() {
        return Vec::new();
    }
    let m = groups[0].ranks.len();
    let mut out = vec![0usize; m];
    for g in groups {
        for (q, &r) in g.ranks.iter().enumerate() {
            out[q] += r;
        }
    }
    out
}

/// Betti numbers of the attraction basin: absolute homology of `W_l`.
pub fn basin_betti(filt: &MorseFiltration, field: HomologyField) -> Result<BettiVector, HomologyError> {
    let wl = filt.neighborhood(filt.len());
    let empty = CubicalSet::empty(wl.grid().clone());
    betti(wl, &empty, field)
}

/// Quotient basin Betti numbers: every Morse set collapsed to its own point.
pub fn quotient_basin_betti(
    graph: &MorseGraph,
    filt: &MorseFiltration,
    field: HomologyField,
) -> Result<BettiVector, HomologyError> {
    let wl = filt.neighborhood(filt.len());
    let pieces: Vec<CubicalSet> = graph
        .components()
        .iter()
        .map(|c| c.collar(1).intersection(wl))
        .collect();
    let refs: Vec<&CubicalSet> = pieces.iter().collect();
    let mut ranks = collapsed_betti(wl, &refs, field)?;
    ranks[0] += 1;
    Ok(BettiVector { ranks, field })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::grid::CubicalGrid;

    fn grid(n: usize) -> Arc<CubicalGrid> {
        Arc::new(CubicalGrid::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![n, n]).unwrap())
    }

    fn block(g: &Arc<CubicalGrid>, i0: usize, i1: usize, j0: usize, j1: usize) -> CubicalSet {
        let mut s = CubicalSet::empty(g.clone());
        for i in i0..i1 {
            for j in j0..j1 {
                s.insert(g.from_multi(&[i, j]));
            }
        }
        s
    }

    #[test]
    fn solid_block_is_contractible() {
        let g = grid(4);
        let x = block(&g, 0, 2, 0, 2);
        let empty = CubicalSet::empty(g.clone());
        for field in [HomologyField::Z2, HomologyField::Rational] {
            assert_eq!(betti(&x, &empty, field).unwrap().ranks, vec![1, 0, 0]);
        }
    }

    #[test]
    fn hollow_ring_has_a_loop() {
        let g = grid(5);
        let mut ring = block(&g, 1, 4, 1, 4);
        ring.remove(g.from_multi(&[2, 2]));
        let empty = CubicalSet::empty(g.clone());
        for field in [HomologyField::Z2, HomologyField::Rational] {
            assert_eq!(betti(&ring, &empty, field).unwrap().ranks, vec![1, 1, 0]);
            assert_eq!(euler(&ring, &empty, field).unwrap(), 0);
        }
    }

    #[test]
    fn self_pair_is_trivial() {
        let g = grid(5);
        let x = block(&g, 0, 3, 0, 4);
        assert_eq!(betti(&x, &x, HomologyField::Z2).unwrap().ranks, vec![0, 0, 0]);
    }

    #[test]
    fn relative_fundamental_class_of_disk_mod_boundary() {
        let g = grid(5);
        let x = block(&g, 1, 4, 1, 4);
        let mut a = x.clone();
        a.remove(g.from_multi(&[2, 2]));
        for field in [HomologyField::Z2, HomologyField::Rational] {
            assert_eq!(betti(&x, &a, field).unwrap().ranks, vec![0, 0, 1]);
        }
    }

    #[test]
    fn pair_not_nested_is_an_error() {
        let g = grid(4);
        let x = block(&g, 0, 2, 0, 2);
        let a = block(&g, 2, 4, 2, 4);
        assert!(matches!(betti(&x, &a, HomologyField::Z2), Err(HomologyError::PairNotNested)));
    }

    #[test]
    fn solid_3d_block_and_shell() {
        let g3 = Arc::new(CubicalGrid::new(vec![0.0; 3], vec![1.0; 3], vec![4, 4, 4]).unwrap());
        let mut x = CubicalSet::empty(g3.clone());
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    x.insert(g3.from_multi(&[i, j, k]));
                }
            }
        }
        let empty = CubicalSet::empty(g3.clone());
        assert_eq!(betti(&x, &empty, HomologyField::Z2).unwrap().ranks, vec![1, 0, 0, 0]);

        // hollow shell: 3x3x3 minus the center is a 2-sphere
        let mut shell = x.clone();
        shell.remove(g3.from_multi(&[1, 1, 1]));
        assert_eq!(betti(&shell, &empty, HomologyField::Z2).unwrap().ranks, vec![1, 0, 1, 0]);
    }

    #[test]
    fn collapsed_pieces_corrections() {
        // square with a collapsed sub-disk: nothing changes (reduced)
        let g = grid(8);
        let x = block(&g, 0, 8, 0, 8);
        let blob = block(&g, 3, 5, 3, 5);
        let ranks = collapsed_betti(&x, &[&blob], HomologyField::Z2).unwrap();
        assert_eq!(ranks, vec![0, 0, 0]);

        // square with a collapsed ring: a 2-sphere wedge a disk (reduced: 0,0,1)
        let ring = block(&g, 1, 7, 1, 7).difference(&block(&g, 2, 6, 2, 6));
        let ranks = collapsed_betti(&x, &[&ring], HomologyField::Z2).unwrap();
        assert_eq!(ranks, vec![0, 0, 1]);

        // central disk and surrounding ring to separate points: still a sphere
        let ranks = collapsed_betti(&x, &[&blob, &ring], HomologyField::Z2).unwrap();
        assert_eq!(ranks, vec![0, 0, 1]);

        // touching pieces share cells and are rejected
        let touching = block(&g, 2, 6, 2, 6).difference(&blob);
        assert!(matches!(
            collapsed_betti(&x, &[&blob, &touching], HomologyField::Z2),
            Err(HomologyError::CollarOverlap)
        ));

        // two blobs in two disjoint squares, collapsed separately
        let two = block(&g, 0, 3, 0, 3).union(&block(&g, 5, 8, 0, 3));
        let b1 = block(&g, 1, 2, 1, 2);
        let b2 = block(&g, 6, 7, 1, 2);
        let ranks = collapsed_betti(&two, &[&b1, &b2], HomologyField::Z2).unwrap();
        // two disks, one collapsed point each: one extra reduced H0 class
        assert_eq!(ranks, vec![1, 0, 0]);
    }

    #[test]
    fn morse_number_sums() {
        let f = HomologyField::Z2;
        let groups = vec![
            BettiVector { ranks: vec![1, 0, 0], field: f },
            BettiVector { ranks: vec![0, 0, 0], field: f },
        ];
        assert_eq!(morse_numbers(&groups), vec![1, 0, 0]);
    }
}
