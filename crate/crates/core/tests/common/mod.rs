//! Shared fixtures and independent oracles for the integration suites.
//!
//! The oracles here deliberately avoid the library's own machinery: strongly
//! connected components are recomputed with a hand-written Kosaraju pass, and
//! homology ranks with a dense Gaussian elimination over Z/2 on independently
//! enumerated cells.

#![allow(dead_code)]

use std::sync::{Arc, OnceLock};
use std::time::Instant;

use morseflow::grid::{BoxId, CubicalGrid, CubicalSet};
use morseflow::pipeline::{Analysis, AnalysisConfig};
use morseflow::VectorField;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub struct Fixture {
    pub name: &'static str,
    pub analysis: Analysis,
    pub build_seconds: f64,
}

fn build(name: &'static str) -> Fixture {
    let field = VectorField::builtin(name, 2).unwrap();
    let config = AnalysisConfig::standard(64);
    let start = Instant::now();
    let analysis = Analysis::run(field, config).expect("pipeline");
    Fixture { name, analysis, build_seconds: start.elapsed().as_secs_f64() }
}

pub fn circle() -> &'static Fixture {
    static FIX: OnceLock<Fixture> = OnceLock::new();
    FIX.get_or_init(|| build("circle-attractor"))
}

pub fn double_well() -> &'static Fixture {
    static FIX: OnceLock<Fixture> = OnceLock::new();
    FIX.get_or_init(|| build("double-well"))
}

pub fn rng(tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x4d6f_7273_6546_6c6f ^ tag)
}

/// Uniform random point inside a box.
pub fn random_point_in(grid: &CubicalGrid, b: BoxId, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (lo, hi) = grid.box_bounds(b);
    lo.iter().zip(&hi).map(|(&l, &h)| rng.gen_range(l..h)).collect()
}

/// Random points drawn from the boxes of a set.
pub fn sample_points(set: &CubicalSet, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let boxes: Vec<BoxId> = set.iter().collect();
    assert!(!boxes.is_empty(), "cannot sample from an empty set");
    (0..count)
        .map(|_| {
            let b = boxes[rng.gen_range(0..boxes.len())];
            random_point_in(set.grid(), b, rng)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// independent SCC oracle (iterative Kosaraju)
// ---------------------------------------------------------------------------

pub fn kosaraju_scc(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for start in 0..n {
        if seen[start] {
            continue;
        }
        // iterative postorder
        let mut stack = vec![(start, 0usize)];
        seen[start] = true;
        while let Some(&mut (v, ref mut i)) = stack.last_mut() {
            if *i < adj[v].len() {
                let w = adj[v][*i];
                *i += 1;
                if !seen[w] {
                    seen[w] = true;
                    stack.push((w, 0));
                }
            } else {
                order.push(v);
                stack.pop();
            }
        }
    }
    let mut radj = vec![Vec::new(); n];
    for (v, outs) in adj.iter().enumerate() {
        for &w in outs {
            radj[w].push(v);
        }
    }
    let mut comp_of = vec![usize::MAX; n];
    let mut comps = Vec::new();
    for &start in order.iter().rev() {
        if comp_of[start] != usize::MAX {
            continue;
        }
        let cid = comps.len();
        let mut comp = vec![start];
        comp_of[start] = cid;
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for &w in &radj[v] {
                if comp_of[w] == usize::MAX {
                    comp_of[w] = cid;
                    comp.push(w);
                    stack.push(w);
                }
            }
        }
        comps.push(comp);
    }
    comps
}

/// Recurrent components by the oracle: SCCs with an internal edge.
pub fn oracle_recurrent_components(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    kosaraju_scc(adj)
        .into_iter()
        .filter(|comp| {
            comp.len() > 1 || adj[comp[0]].contains(&comp[0])
        })
        .map(|mut comp| {
            comp.sort_unstable();
            comp
        })
        .collect()
}

// ---------------------------------------------------------------------------
// independent homology oracle (dense Z/2 elimination on its own cell model)
// ---------------------------------------------------------------------------

/// A cell keyed by doubled coordinates: vertices have even entries, extents
/// are odd (interval midpoints). This is a different encoding from the
/// library's (coordinate, extent-mask) pairs.
type OracleCell = Vec<i32>;

fn oracle_cells(set: &CubicalSet) -> Vec<std::collections::BTreeSet<OracleCell>> {
    let grid = set.grid();
    let m = grid.dim();
    let mut by_dim = vec![std::collections::BTreeSet::new(); m + 1];
    for b in set.iter() {
        let multi = grid.to_multi(b);
        // every cell of the closed box: each axis picks 2i, 2i+1 or 2i+2
        let mut choice = vec![0u8; m];
        loop {
            let mut cell = Vec::with_capacity(m);
            let mut dim = 0;
            for a in 0..m {
                let base = 2 * multi[a] as i32;
                match choice[a] {
                    0 => cell.push(base),
                    1 => {
                        cell.push(base + 1);
                        dim += 1;
                    }
                    _ => cell.push(base + 2),
                }
            }
            by_dim[dim].insert(cell);
            let mut carry = true;
            for c in choice.iter_mut() {
                if carry {
                    *c += 1;
                    if *c == 3 {
                        *c = 0;
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
    by_dim
}

fn dense_rank_z2(mut rows: Vec<Vec<bool>>) -> usize {
    let nrows = rows.len();
    if nrows == 0 {
        return 0;
    }
    let ncols = rows[0].len();
    let mut rank = 0;
    let mut row = 0;
    for col in 0..ncols {
        if row == nrows {
            break;
        }
        let Some(pivot) = (row..nrows).find(|&r| rows[r][col]) else { continue };
        rows.swap(row, pivot);
        for r in 0..nrows {
            if r != row && rows[r][col] {
                for c in col..ncols {
                    let v = rows[row][c];
                    rows[r][c] ^= v;
                }
            }
        }
        row += 1;
        rank += 1;
    }
    rank
}

/// Relative Betti numbers over Z/2 by brute force.
pub fn oracle_betti(x: &CubicalSet, a: &CubicalSet) -> Vec<usize> {
    assert!(a.is_subset(x));
    let m = x.grid().dim();
    let x_cells = oracle_cells(x);
    let a_cells = oracle_cells(a);
    let rel: Vec<Vec<OracleCell>> = (0..=m)
        .map(|q| x_cells[q].iter().filter(|c| !a_cells[q].contains(*c)).cloned().collect())
        .collect();
    let index: Vec<std::collections::BTreeMap<&OracleCell, usize>> = rel
        .iter()
        .map(|cells| cells.iter().enumerate().map(|(i, c)| (c, i)).collect())
        .collect();

    let mut boundary_rank = vec![0usize; m + 2];
    for q in 1..=m {
        if rel[q].is_empty() || rel[q - 1].is_empty() {
            continue;
        }
        let mut rows = vec![vec![false; rel[q].len()]; rel[q - 1].len()];
        for (j, cell) in rel[q].iter().enumerate() {
            for (axis, &coord) in cell.iter().enumerate() {
                if coord % 2 != 0 {
                    for delta in [-1, 1] {
                        let mut face = cell.clone();
                        face[axis] = coord + delta;
                        if let Some(&i) = index[q - 1].get(&face) {
                            rows[i][j] = !rows[i][j];
                        }
                    }
                }
            }
        }
        boundary_rank[q] = dense_rank_z2(rows);
    }
    (0..=m).map(|q| rel[q].len() - boundary_rank[q] - boundary_rank[q + 1]).collect()
}

/// Random cubical set on a small grid.
pub fn random_set(grid: &Arc<CubicalGrid>, density: f64, rng: &mut ChaCha8Rng) -> CubicalSet {
    let mut s = CubicalSet::empty(grid.clone());
    for b in 0..grid.box_count() {
        if rng.gen_bool(density) {
            s.insert(BoxId(b));
        }
    }
    s
}

/// Random pair `A ⊆ X`.
pub fn random_pair(grid: &Arc<CubicalGrid>, rng: &mut ChaCha8Rng) -> (CubicalSet, CubicalSet) {
    let x = random_set(grid, rng.gen_range(0.3..0.9), rng);
    let mut a = CubicalSet::empty(grid.clone());
    let keep = rng.gen_range(0.2..0.8);
    for b in x.iter() {
        if rng.gen_bool(keep) {
            a.insert(b);
        }
    }
    (x, a)
}

/// Random nested triple `Z ⊆ Y ⊆ X`.
pub fn random_triple(grid: &Arc<CubicalGrid>, rng: &mut ChaCha8Rng) -> (CubicalSet, CubicalSet, CubicalSet) {
    let (x, y) = random_pair(grid, rng);
    let mut z = CubicalSet::empty(grid.clone());
    let keep = rng.gen_range(0.2..0.8);
    for b in y.iter() {
        if rng.gen_bool(keep) {
            z.insert(b);
        }
    }
    (x, y, z)
}

pub fn small_grid(n: usize) -> Arc<CubicalGrid> {
    Arc::new(CubicalGrid::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![n, n]).unwrap())
}
