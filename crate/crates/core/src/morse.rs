//! Recurrent components, their reachability order, and the attractor
//! filtration of a combinatorial outer map.
//!
//! Recurrent components are strongly connected components of the box map that
//! carry at least one internal edge (a fixed box under the outer map is the
//! discrete trace of an invariant set). The total order extends the reverse
//! reachability partial order: components that reach nothing else come first,
//! ties broken by smallest contained flat box index, so runs are reproducible.

use std::fmt::Write as _;

use petgraph::graph::{DiGraph, NodeIndex};
use thiserror::Error;

use crate::grid::{BoxId, CubicalSet};
use crate::outer::OuterMap;

#[derive(Debug, Error)]
pub enum MorseError {
    #[error("attractor escapes domain through box {0}")]
    AttractorEscapes(usize),
    #[error("seed set is empty")]
    EmptySeed,
    #[error("internal consistency: {0}")]
    Inconsistent(String),
    #[error("index {k} out of range 0..={l}")]
    IndexOutOfRange { k: usize, l: usize },
}

/// Recurrent components of an outer map with their reachability order.
#[derive(Debug, Clone)]
pub struct MorseGraph {
    /// `M_1, ..., M_l` in order: components that reach nothing else first.
    components: Vec<CubicalSet>,
    /// Domain boxes belonging to no recurrent component.
    transient: CubicalSet,
    /// Reachability pairs `(j, i)`: component `j` reaches component `i`
    /// (0-based indices into `components`, `j != i`).
    edges: Vec<(usize, usize)>,
}

impl MorseGraph {
    pub fn components(&self) -> &[CubicalSet] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn transient(&self) -> &CubicalSet {
        &self.transient
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Union of all recurrent components.
    pub fn recurrent_set(&self) -> CubicalSet {
        let mut set = CubicalSet::empty(self.transient.grid().clone());
        for c in &self.components {
            set = set.union(c);
        }
        set
    }

    /// DOT digraph with one node per component and the reachability edges.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph morse {\n");
        for (i, c) in self.components.iter().enumerate() {
            writeln!(out, "  m{} [label=\"M{} ({} boxes)\"];", i + 1, i + 1, c.len()).unwrap();
        }
        let mut edges = self.edges.clone();
        edges.sort_unstable();
        for (j, i) in edges {
            writeln!(out, "  m{} -> m{};", j + 1, i + 1).unwrap();
        }
        out.push_str("}\n");
        out
    }
}

/// Compute the Morse graph of an outer map.
///
/// Distinct recurrent components stay distinct even when their box covers
/// touch; see [`condense_merged`] for the variant the pipeline uses.
pub fn condense(map: &OuterMap) -> MorseGraph {
    condense_impl(map, false)
}

/// Compute the Morse graph, merging recurrent components that cannot be told
/// apart at grid resolution: components whose covers share cells (touch as
/// complexes, i.e. are Moore-adjacent) are one combinatorial Morse set, as are
/// any components linked into a reachability cycle through such contacts.
///
/// A hyperbolic equilibrium sitting on a grid vertex splits into up to `2^m`
/// mutually unreachable fixed boxes under the exact hit map; this puts them
/// back together.
pub fn condense_merged(map: &OuterMap) -> MorseGraph {
    condense_impl(map, true)
}

fn condense_impl(map: &OuterMap, merge_touching: bool) -> MorseGraph {
    let grid = map.grid().clone();
    let n = grid.box_count();

    let mut graph = DiGraph::<(), (), u32>::with_capacity(n, n * 4);
    let nodes: Vec<NodeIndex<u32>> = (0..n).map(|_| graph.add_node(())).collect();
    for b in 0..n {
        if !map.in_domain(BoxId(b)) {
            continue;
        }
        for &t in map.image(BoxId(b)) {
            graph.add_edge(nodes[b], nodes[t as usize], ());
        }
    }

    // SCCs in reverse topological order of the condensation (successors first).
    let sccs = petgraph::algo::tarjan_scc(&graph);
    let mut scc_of = vec![usize::MAX; n];
    for (cid, comp) in sccs.iter().enumerate() {
        for &node in comp {
            scc_of[node.index()] = cid;
        }
    }

    // A component is recurrent if it has an internal edge.
    let mut recurrent = vec![false; sccs.len()];
    for (cid, comp) in sccs.iter().enumerate() {
        if comp.len() > 1 {
            recurrent[cid] = true;
        } else {
            let b = comp[0].index();
            if map.in_domain(BoxId(b)) && map.image(BoxId(b)).binary_search(&(b as u32)).is_ok() {
                recurrent[cid] = true;
            }
        }
    }

    // Reachability between recurrent components, via a per-SCC bitmask DP in
    // reverse topological order.
    let rec_ids: Vec<usize> = (0..sccs.len()).filter(|&c| recurrent[c]).collect();
    let rec_index: Vec<Option<usize>> = {
        let mut v = vec![None; sccs.len()];
        for (i, &c) in rec_ids.iter().enumerate() {
            v[c] = Some(i);
        }
        v
    };
    let words = rec_ids.len().div_ceil(64).max(1);
    let mut reach = vec![vec![0u64; words]; sccs.len()];
    for (cid, comp) in sccs.iter().enumerate() {
        if let Some(r) = rec_index[cid] {
            reach[cid][r / 64] |= 1 << (r % 64);
        }
        for &node in comp {
            let b = node.index();
            if !map.in_domain(BoxId(b)) {
                continue;
            }
            for &t in map.image(BoxId(b)) {
                let tc = scc_of[t as usize];
                if tc != cid {
                    // successors already final thanks to tarjan's output order
                    let (head, tail) = reach.split_at_mut(cid.max(tc));
                    let (dst, src) = if tc < cid { (&mut tail[0], &head[tc]) } else { (&mut head[cid], &tail[0]) };
                    for w in 0..words {
                        dst[w] |= src[w];
                    }
                }
            }
        }
    }
    let rec_reaches = |a: usize, b: usize| -> bool {
        let cid = rec_ids[a];
        reach[cid][b / 64] & (1 << (b % 64)) != 0
    };

    // Group recurrent components. Without merging every component is its own
    // group; with merging, components whose covers touch (or which close a
    // reachability cycle through touching covers) collapse into one.
    let l_raw = rec_ids.len();
    let groups: Vec<Vec<usize>> = if !merge_touching {
        (0..l_raw).map(|a| vec![a]).collect()
    } else {
        let mut box_rec = vec![usize::MAX; n];
        for (a, &cid) in rec_ids.iter().enumerate() {
            for &node in &sccs[cid] {
                box_rec[node.index()] = a;
            }
        }
        let mut h = DiGraph::<(), (), u32>::with_capacity(l_raw, l_raw * 2);
        let hn: Vec<NodeIndex<u32>> = (0..l_raw).map(|_| h.add_node(())).collect();
        for a in 0..l_raw {
            for b in 0..l_raw {
                if a != b && rec_reaches(a, b) {
                    h.add_edge(hn[a], hn[b], ());
                }
            }
        }
        for (a, &cid) in rec_ids.iter().enumerate() {
            for &node in &sccs[cid] {
                for nb in grid.moore_neighbors(BoxId(node.index())) {
                    let other = box_rec[nb.0];
                    if other != usize::MAX && other != a {
                        h.add_edge(hn[a], hn[other], ());
                        h.add_edge(hn[other], hn[a], ());
                    }
                }
            }
        }
        petgraph::algo::tarjan_scc(&h)
            .into_iter()
            .map(|grp| grp.into_iter().map(|nx| nx.index()).collect())
            .collect()
    };

    let group_boxes: Vec<Vec<usize>> = groups
        .iter()
        .map(|grp| {
            let mut boxes: Vec<usize> = grp
                .iter()
                .flat_map(|&a| sccs[rec_ids[a]].iter().map(|nx| nx.index()))
                .collect();
            boxes.sort_unstable();
            boxes
        })
        .collect();
    // Reachability pairs between groups.
    let l = groups.len();
    let mut group_of = vec![usize::MAX; l_raw];
    for (g, grp) in groups.iter().enumerate() {
        for &a in grp {
            group_of[a] = g;
        }
    }
    let mut reach_to: Vec<Vec<usize>> = vec![Vec::new(); l];
    let mut reached_from: Vec<Vec<usize>> = vec![Vec::new(); l];
    for ga in 0..l {
        let mut targets = vec![false; l];
        for &a in &groups[ga] {
            let cid = rec_ids[a];
            for b in 0..l_raw {
                if reach[cid][b / 64] & (1 << (b % 64)) != 0 {
                    targets[group_of[b]] = true;
                }
            }
        }
        for (gb, &hit) in targets.iter().enumerate() {
            if hit && gb != ga {
                reach_to[ga].push(gb);
                reached_from[gb].push(ga);
            }
        }
    }

    // Order: groups that reach no other group first, smallest box id breaks
    // ties (Kahn from the sinks of the reachability relation).
    let min_box: Vec<usize> = group_boxes.iter().map(|bs| bs[0]).collect();
    let mut pending: Vec<usize> = reach_to.iter().map(|t| t.len()).collect();
    let mut ready: std::collections::BTreeSet<(usize, usize)> = (0..l)
        .filter(|&g| pending[g] == 0)
        .map(|g| (min_box[g], g))
        .collect();
    let mut order = Vec::with_capacity(l);
    while let Some(&(mb, g)) = ready.iter().next() {
        ready.remove(&(mb, g));
        order.push(g);
        for &p in &reached_from[g] {
            pending[p] -= 1;
            if pending[p] == 0 {
                ready.insert((min_box[p], p));
            }
        }
    }
    assert_eq!(order.len(), l, "group reachability is acyclic");

    let components: Vec<CubicalSet> = order
        .iter()
        .map(|&a| CubicalSet::from_boxes(grid.clone(), group_boxes[a].iter().map(|&b| BoxId(b))))
        .collect();
    let mut transient = map.domain_set();
    for c in &components {
        transient = transient.difference(c);
    }
    let mut pos_of = vec![usize::MAX; l];
    for (pos, &g) in order.iter().enumerate() {
        pos_of[g] = pos;
    }
    let mut edges = Vec::new();
    for g in 0..l {
        for &t in &reach_to[g] {
            edges.push((pos_of[g], pos_of[t]));
        }
    }
    edges.sort_unstable();

    MorseGraph { components, transient, edges }
}

/// Least forward-invariant superset of `seed` under the outer map.
pub fn combinatorial_attractor(map: &OuterMap, seed: &CubicalSet) -> Result<CubicalSet, MorseError> {
    if seed.is_empty() {
        return Err(MorseError::EmptySeed);
    }
    let mut hull = seed.clone();
    let mut frontier: Vec<BoxId> = seed.iter().collect();
    while let Some(b) = frontier.pop() {
        if map.exits(b) {
            return Err(MorseError::AttractorEscapes(b.0));
        }
        for &t in map.image(b) {
            let t = BoxId(t as usize);
            if !hull.contains(t) {
                hull.insert(t);
                frontier.push(t);
            }
        }
    }
    Ok(hull)
}

/// The attractor filtration: nested attractors, their basins, positively
/// invariant neighborhoods and dual repellers.
#[derive(Debug, Clone)]
pub struct MorseFiltration {
    /// `A_1 ⊂ ... ⊂ A_l`.
    attractors: Vec<CubicalSet>,
    /// Basins `Ω(A_k)`: boxes whose every reachable recurrent component lies
    /// in `A_k` and which cannot leave the domain.
    basins: Vec<CubicalSet>,
    /// Positively invariant `W_k` with `A_k ⊆ W_k ⊆ Ω(A_k)`.
    neighborhoods: Vec<CubicalSet>,
    /// Dual repellers `A*_1, ..., A*_l` (`A*_k = A_l \ Ω(A_k)`).
    repellers: Vec<CubicalSet>,
}

impl MorseFiltration {
    pub fn len(&self) -> usize {
        self.attractors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attractors.is_empty()
    }

    pub fn attractor(&self, k: usize) -> &CubicalSet {
        &self.attractors[k - 1]
    }

    pub fn basin(&self, k: usize) -> &CubicalSet {
        &self.basins[k - 1]
    }

    pub fn neighborhood(&self, k: usize) -> &CubicalSet {
        &self.neighborhoods[k - 1]
    }

    pub fn attractors(&self) -> &[CubicalSet] {
        &self.attractors
    }

    pub fn basins(&self) -> &[CubicalSet] {
        &self.basins
    }

    pub fn neighborhoods(&self) -> &[CubicalSet] {
        &self.neighborhoods
    }

    /// `A*_k = A_l \ Ω(A_k)`; `A*_0 = A_l` and `A*_l = ∅`.
    pub fn dual_repeller(&self, k: usize) -> Result<CubicalSet, MorseError> {
        let l = self.len();
        if k > l {
            return Err(MorseError::IndexOutOfRange { k, l });
        }
        if k == 0 {
            return Ok(self.attractors[l - 1].clone());
        }
        Ok(self.repellers[k - 1].clone())
    }
}

/// Largest forward-invariant subset of `candidate`: repeatedly trim boxes
/// whose image leaves the candidate or exits the domain.
pub fn forward_invariant_trim(map: &OuterMap, candidate: &CubicalSet) -> CubicalSet {
    let mut keep = candidate.clone();
    loop {
        let mut removed = false;
        let members: Vec<BoxId> = keep.iter().collect();
        for b in members {
            let bad = map.exits(b) || map.image(b).iter().any(|&t| !keep.contains(BoxId(t as usize)));
            if bad {
                keep.remove(b);
                removed = true;
            }
        }
        if !removed {
            return keep;
        }
    }
}

/// Per-box reachability masks over the graph's components plus an "outside"
/// bit (index `l`): bit `i` of `masks[b]` is set when box `b` can reach
/// component `i` under `map`.
fn box_reach_masks(graph: &MorseGraph, map: &OuterMap) -> Vec<Vec<u64>> {
    let grid = map.grid();
    let n = grid.box_count();
    let l = graph.len();
    let mut g = DiGraph::<(), (), u32>::with_capacity(n, n * 4);
    let nodes: Vec<NodeIndex<u32>> = (0..n).map(|_| g.add_node(())).collect();
    for b in 0..n {
        if map.in_domain(BoxId(b)) {
            for &t in map.image(BoxId(b)) {
                g.add_edge(nodes[b], nodes[t as usize], ());
            }
        }
    }
    let sccs = petgraph::algo::tarjan_scc(&g);
    let mut scc_of = vec![usize::MAX; n];
    for (cid, comp) in sccs.iter().enumerate() {
        for &node in comp {
            scc_of[node.index()] = cid;
        }
    }
    let words = (l + 1).div_ceil(64);
    let outside_bit = l;
    let mut label = vec![vec![0u64; words]; sccs.len()];
    for (ci, comp) in graph.components().iter().enumerate() {
        for b in comp.iter() {
            label[scc_of[b.0]][ci / 64] |= 1 << (ci % 64);
        }
    }
    let mut reach = vec![vec![0u64; words]; sccs.len()];
    for (cid, comp) in sccs.iter().enumerate() {
        for w in 0..words {
            reach[cid][w] |= label[cid][w];
        }
        for &node in comp {
            let b = node.index();
            if !map.in_domain(BoxId(b)) {
                // unknown fate: treat as escaped
                reach[cid][outside_bit / 64] |= 1 << (outside_bit % 64);
                continue;
            }
            if map.exits(BoxId(b)) {
                reach[cid][outside_bit / 64] |= 1 << (outside_bit % 64);
            }
            for &t in map.image(BoxId(b)) {
                let tc = scc_of[t as usize];
                if tc != cid {
                    let (head, tail) = reach.split_at_mut(cid.max(tc));
                    let (dst, src) = if tc < cid { (&mut tail[0], &head[tc]) } else { (&mut head[cid], &tail[0]) };
                    for w in 0..words {
                        dst[w] |= src[w];
                    }
                }
            }
        }
    }
    (0..n).map(|b| reach[scc_of[b]].clone()).collect()
}

/// Build the filtration from a Morse graph.
///
/// `map` should be a raw hit map (no bloat): hulls iterate `s ∪ image(s)` to
/// a fixed point, and a bloated image gains one ring per application, which
/// ratchets the fixed point outward wherever the flow moves less than a box
/// per step. Basins, neighborhoods and dual repellers judge box fates on
/// `recurrence_map`, the longer-time map the graph came from: at the short
/// map time, quantization lets slow boxes brush components they do not truly
/// reach, which hollows out the basins.
pub fn filtration(graph: &MorseGraph, map: &OuterMap, recurrence_map: &OuterMap) -> Result<MorseFiltration, MorseError> {
    let grid = map.grid().clone();
    let l = graph.len();
    if l == 0 {
        return Err(MorseError::Inconsistent("no recurrent components".into()));
    }

    // Attractor chain.
    let mut attractors = Vec::with_capacity(l);
    let mut seed = CubicalSet::empty(grid.clone());
    for k in 0..l {
        seed = seed.union(&graph.components()[k]);
        let hull = combinatorial_attractor(map, &seed)?;
        if let Some(prev) = attractors.last() {
            let prev: &CubicalSet = prev;
            if !prev.is_subset(&hull) || prev == &hull {
                return Err(MorseError::Inconsistent(format!("attractor chain not strictly nested at level {}", k + 1)));
            }
        }
        attractors.push(hull);
    }

    let n = grid.box_count();
    let words = (l + 1).div_ceil(64);
    let reach = box_reach_masks(graph, recurrence_map);

    // Basins and trimmed neighborhoods.
    let mut basins = Vec::with_capacity(l);
    let mut neighborhoods = Vec::with_capacity(l);
    for k in 0..l {
        // allowed components: those contained in A_k
        let mut allowed = vec![0u64; words];
        for ci in 0..l {
            if graph.components()[ci].is_subset(&attractors[k]) {
                allowed[ci / 64] |= 1 << (ci % 64);
            }
        }
        let mut basin = CubicalSet::empty(grid.clone());
        for b in 0..n {
            if !map.in_domain(BoxId(b)) {
                continue;
            }
            let r = &reach[b];
            let inside = (0..words).all(|w| r[w] & !allowed[w] == 0);
            if inside {
                basin.insert(BoxId(b));
            }
        }
        if !attractors[k].is_subset(&basin) {
            return Err(MorseError::Inconsistent(format!("attractor {} not contained in its basin", k + 1)));
        }
        let w = forward_invariant_trim(recurrence_map, &basin);
        if !attractors[k].is_subset(&w) {
            return Err(MorseError::Inconsistent(format!("trimmed neighborhood lost attractor {}", k + 1)));
        }
        if let Some(prev) = neighborhoods.last() {
            let prev: &CubicalSet = prev;
            if !prev.is_subset(&w) {
                return Err(MorseError::Inconsistent(format!("neighborhood chain not nested at level {}", k + 1)));
            }
        }
        basins.push(basin);
        neighborhoods.push(w);
    }

    // Dual repellers: A*_k = (A_l \ Ω(A_k)) restricted to the boxes that are
    // recurrent or connecting among the remaining components M_{k+1}..M_l:
    // reachable from one of them and reaching one of them, both judged on the
    // recurrence-time map. At the short map time, quantization lets slow
    // transient boxes brush a component they do not truly connect to.
    let rec_reach = box_reach_masks(graph, recurrence_map);
    let top = attractors[l - 1].clone();
    let mut repellers = Vec::with_capacity(l);
    for k in 0..l {
        let mut forward = CubicalSet::empty(grid.clone());
        let mut frontier = Vec::new();
        for comp in &graph.components()[k + 1..] {
            for b in comp.iter() {
                forward.insert(b);
                frontier.push(b);
            }
        }
        while let Some(b) = frontier.pop() {
            if !recurrence_map.in_domain(b) {
                continue;
            }
            for &t in recurrence_map.image(b) {
                let t = BoxId(t as usize);
                if !forward.contains(t) {
                    forward.insert(t);
                    frontier.push(t);
                }
            }
        }
        let mut connecting = CubicalSet::empty(grid.clone());
        for b in forward.iter() {
            let r = &rec_reach[b.0];
            let reaches_high = (k + 1..l).any(|ci| r[ci / 64] & (1 << (ci % 64)) != 0);
            if reaches_high {
                connecting.insert(b);
            }
        }
        repellers.push(top.difference(&basins[k]).intersection(&connecting));
    }

    Ok(MorseFiltration { attractors, basins, neighborhoods, repellers })
}
