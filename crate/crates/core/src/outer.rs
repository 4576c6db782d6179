//! Combinatorial outer approximation of the time-`tau` flow map.
//!
//! For every box a lattice of sample points (corners included) is pushed
//! through the flow map; the boxes hit by in-domain images, dilated by
//! `bloat_rings` Moore rings, form the box's image list. Boxes with a sample
//! image leaving the domain are flagged; downstream analysis treats such an
//! exit as absorption into a virtual outside sink.
//!
//! The construction is sampling-based, not rigorous: the bloat parameter is
//! exposed so a run can be repeated with a larger value to check stability of
//! the resulting Morse graph.

use std::io::{BufRead, Write};
use std::sync::Arc;

use bitvec::prelude::*;
use rayon::prelude::*;
use thiserror::Error;

use crate::flow::{flow_map, FlowError, VectorField};
use crate::grid::{grid_header, parse_grid_header, BoxId, CubicalGrid, CubicalSet, GridError};

#[derive(Debug, Error)]
pub enum OuterError {
    #[error("integration blew up while mapping box {box_id}: {source}")]
    BoxBlowup { box_id: usize, source: FlowError },
    #[error("need at least 2 samples per axis, got {0}")]
    TooFewSamples(usize),
    #[error("map time must be positive, got {0}")]
    BadTau(f64),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Construction parameters for [`OuterMap::build`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterParams {
    pub tau: f64,
    pub h: f64,
    pub samples_per_axis: usize,
    pub bloat_rings: usize,
}

/// Directed multivalued map on grid boxes over-approximating the flow map.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterMap {
    grid: Arc<CubicalGrid>,
    params: OuterParams,
    /// Boxes the map is defined on (the full grid unless restricted).
    domain: BitVec<u64, Lsb0>,
    /// Sorted, duplicate-free image lists per box.
    images: Vec<Vec<u32>>,
    /// Set when some sample image of the box left the domain.
    exits: BitVec<u64, Lsb0>,
}

impl OuterMap {
    pub fn build(grid: Arc<CubicalGrid>, field: &VectorField, params: OuterParams) -> Result<Self, OuterError> {
        if params.samples_per_axis < 2 {
            return Err(OuterError::TooFewSamples(params.samples_per_axis));
        }
        if !(params.tau > 0.0) {
            return Err(OuterError::BadTau(params.tau));
        }
        let dim = grid.dim();
        let n = grid.box_count();
        let per_box: Vec<Result<(Vec<u32>, bool), OuterError>> = (0..n)
            .into_par_iter()
            .map(|b| {
                let id = BoxId(b);
                let (lo, hi) = grid.box_bounds(id);
                let s = params.samples_per_axis;
                let mut hits: Vec<u32> = Vec::new();
                let mut exit = false;
                let mut lattice = vec![0usize; dim];
                let mut point = vec![0.0; dim];
                loop {
                    for a in 0..dim {
                        let frac = lattice[a] as f64 / (s - 1) as f64;
                        let w = hi[a] - lo[a];
                        // samples on shared faces are pulled inside by a hair
                        // so an identity map keeps each box's image at itself
                        point[a] = (lo[a] + frac * w).clamp(lo[a] + 1e-9 * w, hi[a] - 1e-9 * w);
                    }
                    let image = flow_map(field, &point, params.tau, params.h)
                        .map_err(|source| OuterError::BoxBlowup { box_id: b, source })?;
                    match grid.box_of_point(&image) {
                        Some(target) => hits.push(target.0 as u32),
                        None => exit = true,
                    }
                    // odometer over the sample lattice
                    let mut carry = true;
                    for slot in lattice.iter_mut() {
                        if carry {
                            *slot += 1;
                            if *slot == s {
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
                hits.sort_unstable();
                hits.dedup();
                if params.bloat_rings > 0 {
                    let hit_set = CubicalSet::from_boxes(grid.clone(), hits.iter().map(|&i| BoxId(i as usize)));
                    let bloated = hit_set.collar(params.bloat_rings);
                    hits = bloated.iter().map(|b| b.0 as u32).collect();
                    hits.sort_unstable();
                }
                Ok((hits, exit))
            })
            .collect();

        let mut images = Vec::with_capacity(n);
        let mut exits = bitvec![u64, Lsb0; 0; n];
        for (b, r) in per_box.into_iter().enumerate() {
            let (hits, exit) = r?;
            images.push(hits);
            exits.set(b, exit);
        }
        Ok(Self { grid, params, domain: bitvec![u64, Lsb0; 1; n], images, exits })
    }

    pub fn grid(&self) -> &Arc<CubicalGrid> {
        &self.grid
    }

    pub fn params(&self) -> OuterParams {
        self.params
    }

    pub fn box_count(&self) -> usize {
        self.grid.box_count()
    }

    pub fn in_domain(&self, b: BoxId) -> bool {
        self.domain[b.0]
    }

    pub fn domain_set(&self) -> CubicalSet {
        CubicalSet::from_boxes(self.grid.clone(), self.domain.iter_ones().map(BoxId))
    }

    pub fn image(&self, b: BoxId) -> &[u32] {
        &self.images[b.0]
    }

    pub fn exits(&self, b: BoxId) -> bool {
        self.exits[b.0]
    }

    /// Image of a whole set, as a set.
    pub fn image_of_set(&self, s: &CubicalSet) -> CubicalSet {
        let mut out = CubicalSet::empty(self.grid.clone());
        for b in s.iter() {
            for &t in self.image(b) {
                out.insert(BoxId(t as usize));
            }
        }
        out
    }

    /// Restrict the map to `s`: domain and image lists are intersected with
    /// `s`, and image boxes falling outside `s` count as exits.
    pub fn restrict(&self, s: &CubicalSet) -> OuterMap {
        let n = self.grid.box_count();
        let mut domain = bitvec![u64, Lsb0; 0; n];
        let mut images = vec![Vec::new(); n];
        let mut exits = bitvec![u64, Lsb0; 0; n];
        for b in 0..n {
            if !self.domain[b] || !s.contains(BoxId(b)) {
                continue;
            }
            domain.set(b, true);
            let mut exit = self.exits[b];
            let mut list = Vec::with_capacity(self.images[b].len());
            for &t in &self.images[b] {
                if s.contains(BoxId(t as usize)) {
                    list.push(t);
                } else {
                    exit = true;
                }
            }
            images[b] = list;
            exits.set(b, exit);
        }
        OuterMap { grid: self.grid.clone(), params: self.params, domain, images, exits }
    }

    /// Canonical text serialization; bit-exact round trip with [`Self::load`].
    pub fn save<W: Write>(&self, mut w: W) -> Result<(), OuterError> {
        writeln!(w, "{}", grid_header(&self.grid))?;
        writeln!(
            w,
            "params: tau={} h={} samples={} bloat={}",
            self.params.tau, self.params.h, self.params.samples_per_axis, self.params.bloat_rings
        )?;
        for b in self.domain.iter_ones() {
            let flag = if self.exits[b] { "!" } else { "" };
            write!(w, "{b}{flag}:")?;
            for t in &self.images[b] {
                write!(w, " {t}")?;
            }
            writeln!(w)?;
        }
        writeln!(w, "end")?;
        Ok(())
    }

    pub fn load<R: BufRead>(r: R) -> Result<Self, OuterError> {
        let mut lines = r.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or(OuterError::Parse { line: 1, message: "missing grid header".into() })?;
        let grid = Arc::new(parse_grid_header(&header?, 1)?);
        let n = grid.box_count();

        let (_, params_line) = lines
            .next()
            .ok_or(OuterError::Parse { line: 2, message: "missing params line".into() })?;
        let params_line = params_line?;
        let rest = params_line
            .strip_prefix("params:")
            .ok_or_else(|| OuterError::Parse { line: 2, message: "expected `params:` line".into() })?;
        let mut tau = None;
        let mut h = None;
        let mut samples = None;
        let mut bloat = None;
        for tok in rest.split_whitespace() {
            let (key, value) = tok
                .split_once('=')
                .ok_or_else(|| OuterError::Parse { line: 2, message: format!("bad token `{tok}`") })?;
            let bad = |line: usize| OuterError::Parse { line, message: format!("bad value `{value}` for `{key}`") };
            match key {
                "tau" => tau = Some(value.parse::<f64>().map_err(|_| bad(2))?),
                "h" => h = Some(value.parse::<f64>().map_err(|_| bad(2))?),
                "samples" => samples = Some(value.parse::<usize>().map_err(|_| bad(2))?),
                "bloat" => bloat = Some(value.parse::<usize>().map_err(|_| bad(2))?),
                _ => return Err(OuterError::Parse { line: 2, message: format!("unknown key `{key}`") }),
            }
        }
        let params = OuterParams {
            tau: tau.ok_or(OuterError::Parse { line: 2, message: "missing tau".into() })?,
            h: h.ok_or(OuterError::Parse { line: 2, message: "missing h".into() })?,
            samples_per_axis: samples.ok_or(OuterError::Parse { line: 2, message: "missing samples".into() })?,
            bloat_rings: bloat.ok_or(OuterError::Parse { line: 2, message: "missing bloat".into() })?,
        };

        let mut domain = bitvec![u64, Lsb0; 0; n];
        let mut images = vec![Vec::new(); n];
        let mut exits = bitvec![u64, Lsb0; 0; n];
        let mut terminated = false;
        let mut last_line = 2;
        for (idx, line) in lines {
            let line_no = idx + 1;
            last_line = line_no;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            if line.trim() == "end" {
                terminated = true;
                break;
            }
            let (head, tail) = line
                .split_once(':')
                .ok_or_else(|| OuterError::Parse { line: line_no, message: "missing `:`".into() })?;
            let (src_str, exit) = match head.strip_suffix('!') {
                Some(s) => (s, true),
                None => (head, false),
            };
            let src: usize = src_str
                .parse()
                .map_err(|_| OuterError::Parse { line: line_no, message: format!("bad source `{src_str}`") })?;
            if src >= n {
                return Err(OuterError::Parse { line: line_no, message: format!("source {src} out of range") });
            }
            let mut list = Vec::new();
            for tok in tail.split_whitespace() {
                let t: u32 = tok
                    .parse()
                    .map_err(|_| OuterError::Parse { line: line_no, message: format!("bad image `{tok}`") })?;
                if t as usize >= n {
                    return Err(OuterError::Parse { line: line_no, message: format!("image {t} out of range") });
                }
                list.push(t);
            }
            domain.set(src, true);
            images[src] = list;
            exits.set(src, exit);
        }
        if !terminated {
            return Err(OuterError::Parse { line: last_line, message: "missing `end` marker (truncated file?)".into() });
        }
        Ok(Self { grid, params, domain, images, exits })
    }
}
