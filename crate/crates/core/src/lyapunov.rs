//! Numerical Morse-Lyapunov machinery.
//!
//! For every attractor `A_k` of the filtration, a coercive distance function
//! `α_k` vanishes exactly on an absorbing box cover `K_k ⊇ A_k` and blows up
//! at the boundary of the basin cover. Along trajectories,
//!
//! * `φ_k(x) = sup_{t≥0} α_k(S(t)x)` (the sup is attained on a finite window
//!   once the trajectory enters `K_k`),
//! * `ψ_k(x) = ∫ e^{λt} α_k(S(t)x) dt` (the integrand vanishes after entry),
//! * `V_k = 1 - e^{-(φ_k+ψ_k)}` on the basin cover, `V_k = 1` outside it,
//!
//! and the strict Morse-Lyapunov function is `V = Σ_k V_k`, which takes the
//! value `k-1` on the k-th Morse set. The decay witness is
//! `v = Σ_k min(λ e^{-L_k} ψ_k, d(x, ∂Ω_k), 1)`.
//!
//! Differences of `V_k` near saturation are evaluated through the exponential
//! complement (`expm1`), never by subtracting two values close to 1.

use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::flow::{integrate, rk4_step, FlowError, VectorField};
use crate::grid::{BoxId, CubicalGrid, CubicalSet};
use crate::morse::{forward_invariant_trim, MorseFiltration, MorseGraph};
use crate::outer::OuterMap;

#[derive(Debug, Error)]
pub enum LyapunovError {
    #[error("gap between K and the basin complement is under 2 boxes at level {level}; use a deeper grid")]
    GapTooSmall { level: usize },
    #[error("alpha did not fall below {tol} within t_max={t_max} at level {level} (last alpha {last_alpha})")]
    Truncation { level: usize, t_max: f64, tol: f64, last_alpha: f64 },
    #[error("point lies outside the basin cover (V >= 1)")]
    OutsideBasin,
    #[error("generalized critical value {value} lies in [{a}, {b}]")]
    CriticalValueInRange { value: f64, a: f64, b: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("Morse set {k} is not a certified equilibrium component")]
    NotEquilibrium { k: usize },
    #[error("trajectory did not converge to the equilibrium by t_max={t_max}")]
    NonConvergence { t_max: f64 },
    #[error(transparent)]
    Flow(#[from] FlowError),
}

/// Exact point-to-set distance backed by the face-boundary boxes of the set.
#[derive(Debug, Clone)]
pub struct SetDistance {
    grid: Arc<CubicalGrid>,
    set: CubicalSet,
    boundary_bounds: Vec<(Vec<f64>, Vec<f64>)>,
}

impl SetDistance {
    pub fn new(set: &CubicalSet) -> Self {
        let grid = set.grid().clone();
        let boundary_bounds = set
            .face_boundary()
            .into_iter()
            .map(|b| grid.box_bounds(b))
            .collect();
        Self { grid, set: set.clone(), boundary_bounds }
    }

    /// Distance from `p` to the union of the set's boxes (0 inside).
    pub fn distance(&self, p: &[f64]) -> f64 {
        if let Some(b) = self.grid.box_of_point(p) {
            if self.set.contains(b) {
                return 0.0;
            }
        }
        let mut best = f64::INFINITY;
        for (lo, hi) in &self.boundary_bounds {
            let mut sq = 0.0;
            for a in 0..lo.len() {
                let d = (lo[a] - p[a]).max(0.0).max(p[a] - hi[a]);
                sq += d * d;
                if sq >= best {
                    break;
                }
            }
            best = best.min(sq);
        }
        best.sqrt()
    }
}

/// Distance from a point to the complement of a basin cover: the nearer of
/// the in-domain complement boxes and the domain boundary itself.
#[derive(Debug, Clone)]
struct ComplementDistance {
    grid: Arc<CubicalGrid>,
    basin: CubicalSet,
    complement_bounds: Vec<(Vec<f64>, Vec<f64>)>,
}

impl ComplementDistance {
    fn new(basin: &CubicalSet) -> Self {
        let grid = basin.grid().clone();
        let complement = basin.complement();
        let complement_bounds = complement
            .face_boundary()
            .into_iter()
            .map(|b| grid.box_bounds(b))
            .collect();
        Self { grid, basin: basin.clone(), complement_bounds }
    }

    fn distance(&self, p: &[f64]) -> f64 {
        match self.grid.box_of_point(p) {
            None => 0.0,
            Some(b) if !self.basin.contains(b) => 0.0,
            Some(_) => {
                let mut best = self.grid.distance_to_domain_boundary(p);
                let mut best_sq = best * best;
                for (lo, hi) in &self.complement_bounds {
                    let mut sq = 0.0;
                    for a in 0..lo.len() {
                        let d = (lo[a] - p[a]).max(0.0).max(p[a] - hi[a]);
                        sq += d * d;
                        if sq >= best_sq {
                            break;
                        }
                    }
                    if sq < best_sq {
                        best_sq = sq;
                        best = sq.sqrt();
                    }
                }
                best
            }
        }
    }
}

/// Coercive distance function of a core set `K` on a basin cover `Ω`:
/// `α(x) = scale · d(x,K) · (1 + 1/d(x, X∖Ω))`, zero exactly on `K`,
/// radially unbounded towards the basin boundary.
#[derive(Debug, Clone)]
pub struct AlphaFunction {
    k_dist: SetDistance,
    omega_dist: ComplementDistance,
    scale: f64,
}

impl AlphaFunction {
    pub fn eval(&self, p: &[f64]) -> f64 {
        let dk = self.k_dist.distance(p);
        if dk == 0.0 {
            return 0.0;
        }
        let dom = self.omega_dist.distance(p).max(f64::EPSILON);
        self.scale * dk * (1.0 + 1.0 / dom)
    }
}

/// Build an [`AlphaFunction`]; `k` must sit inside `omega` with at least a
/// two-box gap to the complement.
pub fn make_alpha(k: &CubicalSet, omega: &CubicalSet, scale: f64) -> Result<AlphaFunction, LyapunovError> {
    if k.is_empty() || !k.is_subset(omega) {
        return Err(LyapunovError::Precondition("K must be a nonempty subset of the basin".into()));
    }
    if !k.collar(2).is_subset(omega) {
        return Err(LyapunovError::GapTooSmall { level: 0 });
    }
    Ok(AlphaFunction { k_dist: SetDistance::new(k), omega_dist: ComplementDistance::new(omega), scale })
}

/// Evaluation parameters of the Lyapunov construction.
#[derive(Debug, Clone, Copy)]
pub struct LyapunovParams {
    /// Exponential weight of `ψ`. Small values keep `φ+ψ` in a numerically
    /// certifiable range on systems with slow (non-hyperbolic) approaches.
    pub lambda: f64,
    /// Trajectory horizon for the tail criterion.
    pub t_max: f64,
    /// Integration step used for Lyapunov trajectories.
    pub h: f64,
    /// α must fall below this along the trajectory before `t_max`.
    pub truncation_tol: f64,
    /// Scale factor applied to every `α_k` (a second strict M-L function is
    /// obtained from a different scale and λ).
    pub alpha_scale: f64,
}

impl LyapunovParams {
    pub fn new(tau: f64, h: f64) -> Self {
        Self { lambda: 0.25, t_max: 50.0 * tau, h, truncation_tol: 1e-9, alpha_scale: 1.0 }
    }

    pub fn with_variant(mut self, lambda: f64, alpha_scale: f64) -> Self {
        self.lambda = lambda;
        self.alpha_scale = alpha_scale;
        self
    }
}

#[derive(Debug, Clone)]
struct Level {
    basin: CubicalSet,
    core: CubicalSet,
    /// `None` when `basin == core` (degenerate flow): `V_k` is then the
    /// indicator `1 - [x ∈ core]` and no trajectories are needed.
    alpha: Option<AlphaFunction>,
    omega_dist: ComplementDistance,
}

/// Membership of a point relative to one level of the filtration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    /// Outside the basin cover (or out of the domain): `V_k = 1` exactly.
    Outside,
    /// Inside the absorbing core `K_k`: `φ = ψ = 0`, `V_k = 0` exactly.
    Core,
    /// Inside the basin, outside the core: trajectory evaluation.
    Interior,
}

/// Values of one level at a point.
#[derive(Debug, Clone, Copy)]
pub struct LevelValues {
    pub membership: Membership,
    pub phi: f64,
    pub psi: f64,
    /// `L_k = φ_k + ψ_k` (infinite outside the basin).
    pub radial: f64,
    /// `V_k = 1 - e^{-L_k}` (1 outside the basin).
    pub value: f64,
    /// Decay witness `v_k`.
    pub witness: f64,
}

/// Values of the strict Morse-Lyapunov function at a point.
#[derive(Debug, Clone)]
pub struct PointEval {
    pub levels: Vec<LevelValues>,
    /// `V(x) = Σ_k V_k(x)`, in `[0, l]`.
    pub value: f64,
    /// `v(x) = Σ_k v_k(x)`.
    pub witness: f64,
}

/// Trajectory samples plus per-level α traces; suffix evaluations share one
/// integration, which keeps certificate inequalities exact on the sample grid.
pub struct Trace {
    dim: usize,
    h: f64,
    positions: Vec<f64>,
    /// Per level: α along the trajectory, stored up to the entry node.
    alphas: Vec<Vec<f64>>,
    /// First node with `α ≤ truncation_tol`, per level.
    entries: Vec<Option<usize>>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.positions.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn step(&self) -> f64 {
        self.h
    }
}

/// The strict Morse-Lyapunov function of a filtration, with its certificates
/// and deformation operations.
pub struct MorseLyapunov {
    grid: Arc<CubicalGrid>,
    field: VectorField,
    params: LyapunovParams,
    levels: Vec<Level>,
    morse_covers: Vec<CubicalSet>,
    /// Per Morse set: range of `V` over its box centers (its generalized
    /// critical value band).
    critical_ranges: Vec<(f64, f64)>,
}

/// Per-box values of the construction at box centers; row order is the flat
/// box index.
#[derive(Debug, Clone)]
pub struct LyapunovTable {
    pub grid: Arc<CubicalGrid>,
    /// φ of the top level (the attractor function of `A_l`).
    pub phi: Vec<f64>,
    /// ψ of the top level.
    pub psi: Vec<f64>,
    /// Strict M-L value `V`.
    pub value: Vec<f64>,
    /// Decay witness `v`.
    pub witness: Vec<f64>,
}

impl LyapunovTable {
    /// CSV export: `box,x0..,phi,psi,V,v`, one row per box in flat order.
    pub fn to_csv(&self) -> String {
        let dim = self.grid.dim();
        let mut out = String::from("box");
        for a in 0..dim {
            out.push_str(&format!(",x{a}"));
        }
        out.push_str(",phi,psi,V,v\n");
        for b in 0..self.grid.box_count() {
            let c = self.grid.box_center(BoxId(b));
            out.push_str(&b.to_string());
            for v in c {
                out.push_str(&format!(",{v}"));
            }
            out.push_str(&format!(",{},{},{},{}\n", self.phi[b], self.psi[b], self.value[b], self.witness[b]));
        }
        out
    }

    /// Boxes with `V ≤ a`.
    pub fn sublevel_cover(&self, a: f64) -> CubicalSet {
        let mut s = CubicalSet::empty(self.grid.clone());
        for b in 0..self.grid.box_count() {
            if self.value[b] <= a {
                s.insert(BoxId(b));
            }
        }
        s
    }
}

/// Result of the pointwise decay certificate.
#[derive(Debug, Clone)]
pub struct DiniReport {
    pub checked: usize,
    pub violations: Vec<DiniViolation>,
    /// Minimum over samples of `drop/h' - v/2` (nonnegative when all pass).
    pub worst_margin: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct DiniViolation {
    pub point: Vec<f64>,
    /// Observed difference quotient `(V(S(h')x) - V(x))/h'`.
    pub rate: f64,
    /// Required bound `-v(x)/2`.
    pub bound: f64,
    pub witness: f64,
}

impl MorseLyapunov {
    /// Assemble the construction from a filtration.
    ///
    /// `K_k` is the forward-invariant trim of `collar(A_k, 1) ∩ Ω(A_k)` under
    /// the raw hit map (trajectories must be able to enter the core and never
    /// see positive α again). Levels where the trimmed core fills its whole
    /// basin degenerate to indicator functions (this is what happens for the
    /// zero field).
    pub fn build(
        field: &VectorField,
        hull_map: &OuterMap,
        graph: &MorseGraph,
        filt: &MorseFiltration,
        params: LyapunovParams,
    ) -> Result<Self, LyapunovError> {
        let grid = hull_map.grid().clone();
        let mut levels = Vec::with_capacity(filt.len());
        for k in 1..=filt.len() {
            let attractor = filt.attractor(k);
            let basin = filt.basin(k).clone();
            let core = forward_invariant_trim(hull_map, &attractor.collar(1).intersection(&basin));
            let core = if attractor.is_subset(&core) { core } else { attractor.clone() };
            let rest = basin.difference(&core);
            let alpha = if rest.is_empty() {
                None
            } else {
                match make_alpha(&core, &basin, params.alpha_scale) {
                    Ok(a) => Some(a),
                    Err(LyapunovError::GapTooSmall { .. }) => return Err(LyapunovError::GapTooSmall { level: k }),
                    Err(e) => return Err(e),
                }
            };
            levels.push(Level { basin: basin.clone(), core, alpha, omega_dist: ComplementDistance::new(&basin) });
        }
        let mut ml = Self {
            grid,
            field: field.clone(),
            params,
            levels,
            morse_covers: graph.components().to_vec(),
            critical_ranges: Vec::new(),
        };
        // generalized critical values, from the Morse covers themselves
        let mut ranges = Vec::with_capacity(ml.morse_covers.len());
        for cover in ml.morse_covers.clone() {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for b in cover.iter() {
                let v = ml.evaluate(&ml.grid.box_center(b))?.value;
                lo = lo.min(v);
                hi = hi.max(v);
            }
            ranges.push((lo, hi));
        }
        ml.critical_ranges = ranges;
        Ok(ml)
    }

    pub fn params(&self) -> LyapunovParams {
        self.params
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn grid(&self) -> &Arc<CubicalGrid> {
        &self.grid
    }

    /// Value bands of `V` over each Morse-set cover.
    pub fn critical_ranges(&self) -> &[(f64, f64)] {
        &self.critical_ranges
    }

    fn membership(&self, level: &Level, p: &[f64]) -> Membership {
        match self.grid.box_of_point(p) {
            None => Membership::Outside,
            Some(b) if !level.basin.contains(b) => Membership::Outside,
            Some(b) if level.core.contains(b) => Membership::Core,
            Some(_) => Membership::Interior,
        }
    }

    /// True when every level is decided by box membership alone, so no
    /// trajectory is needed.
    fn fast_path(&self, p: &[f64]) -> Option<PointEval> {
        let mut levels = Vec::with_capacity(self.levels.len());
        for level in &self.levels {
            let m = self.membership(level, p);
            match m {
                Membership::Interior => return None,
                Membership::Outside => levels.push(outside_values()),
                Membership::Core => levels.push(core_values()),
            }
        }
        Some(assemble(levels))
    }

    /// Integrate once from `x` and record per-level α traces.
    pub fn trace(&self, x: &[f64]) -> Result<Trace, LyapunovError> {
        let steps = (self.params.t_max / self.params.h).ceil() as usize;
        let t_total = steps as f64 * self.params.h;
        let traj = integrate(&self.field, x, self.params.h, t_total)?;
        let n = traj.len();
        let mut alphas = Vec::with_capacity(self.levels.len());
        let mut entries = Vec::with_capacity(self.levels.len());
        for level in &self.levels {
            match &level.alpha {
                None => {
                    alphas.push(Vec::new());
                    entries.push(Some(0));
                }
                Some(alpha) => {
                    let mut vals = Vec::new();
                    let mut entry = None;
                    for i in 0..n {
                        let a = alpha.eval(traj.sample(i));
                        vals.push(a);
                        if a <= self.params.truncation_tol {
                            entry = Some(i);
                            break;
                        }
                    }
                    alphas.push(vals);
                    entries.push(entry);
                }
            }
        }
        let mut positions = Vec::with_capacity(n * traj.dim());
        for i in 0..n {
            positions.extend_from_slice(traj.sample(i));
        }
        Ok(Trace { dim: traj.dim(), h: self.params.h, positions, alphas, entries })
    }

    fn level_values_at(&self, trace: &Trace, level_idx: usize, node: usize) -> Result<LevelValues, LyapunovError> {
        let level = &self.levels[level_idx];
        let p = trace.position(node);
        match self.membership(level, p) {
            Membership::Outside => return Ok(outside_values()),
            Membership::Core => return Ok(core_values()),
            Membership::Interior => {}
        }
        let alpha = level
            .alpha
            .as_ref()
            .expect("interior membership requires a nondegenerate level");

        let stored = &trace.alphas[level_idx];
        let lambda = self.params.lambda;
        let h = trace.h;

        // locate the entry node at or after `node`
        let entry = match trace.entries[level_idx] {
            Some(e) if e >= node => Some(e),
            _ => {
                // past the stored entry (or no entry): rescan from `node`
                let mut found = None;
                for j in node..trace.len() {
                    let a = if j < stored.len() { stored[j] } else { alpha.eval(trace.position(j)) };
                    if a <= self.params.truncation_tol {
                        found = Some(j);
                        break;
                    }
                }
                found
            }
        };
        let Some(entry) = entry else {
            let last = if stored.is_empty() { f64::NAN } else { *stored.last().unwrap() };
            return Err(LyapunovError::Truncation {
                level: level_idx + 1,
                t_max: self.params.t_max,
                tol: self.params.truncation_tol,
                last_alpha: last,
            });
        };

        let alpha_at = |j: usize| -> f64 {
            if j < stored.len() {
                stored[j]
            } else {
                alpha.eval(trace.position(j))
            }
        };
        let mut phi: f64 = 0.0;
        let mut psi = 0.0;
        let mut prev = alpha_at(node);
        phi = phi.max(prev);
        for j in node + 1..=entry {
            let a = alpha_at(j);
            phi = phi.max(a);
            let w0 = (lambda * ((j - 1 - node) as f64) * h).exp();
            let w1 = (lambda * ((j - node) as f64) * h).exp();
            psi += 0.5 * h * (w0 * prev + w1 * a);
            prev = a;
        }
        let radial = phi + psi;
        let value = -(-radial).exp_m1();
        let basin_gap = level.omega_dist.distance(p);
        let witness = (lambda * (-radial).exp() * psi).min(basin_gap).min(1.0);
        Ok(LevelValues { membership: Membership::Interior, phi, psi, radial, value, witness })
    }

    /// Evaluate all levels at a trace node.
    pub fn eval_trace(&self, trace: &Trace, node: usize) -> Result<PointEval, LyapunovError> {
        let mut levels = Vec::with_capacity(self.levels.len());
        for k in 0..self.levels.len() {
            levels.push(self.level_values_at(trace, k, node)?);
        }
        Ok(assemble(levels))
    }

    /// Evaluate the strict M-L function at a point.
    pub fn evaluate(&self, x: &[f64]) -> Result<PointEval, LyapunovError> {
        if let Some(fast) = self.fast_path(x) {
            return Ok(fast);
        }
        let trace = self.trace(x)?;
        self.eval_trace(&trace, 0)
    }

    /// The attractor function of the top level, in `[0, 1]`.
    pub fn attractor_value(&self, x: &[f64]) -> Result<f64, LyapunovError> {
        Ok(self.evaluate(x)?.levels.last().expect("at least one level").value)
    }

    /// Radially unbounded `L = φ + ψ = -ln(1 - V)` of the top level; errors
    /// outside the basin cover where `V = 1`.
    pub fn radial_value(&self, x: &[f64]) -> Result<f64, LyapunovError> {
        let eval = self.evaluate(x)?;
        let top = eval.levels.last().expect("at least one level");
        if top.membership == Membership::Outside {
            return Err(LyapunovError::OutsideBasin);
        }
        Ok(top.radial)
    }

    /// Per-box table at box centers (parallel over boxes).
    pub fn box_table(&self) -> Result<LyapunovTable, LyapunovError> {
        let n = self.grid.box_count();
        let rows: Vec<Result<(f64, f64, f64, f64), LyapunovError>> = (0..n)
            .into_par_iter()
            .map(|b| {
                let c = self.grid.box_center(BoxId(b));
                let eval = self.evaluate(&c)?;
                let top = eval.levels.last().unwrap();
                Ok((top.phi, top.psi, eval.value, eval.witness))
            })
            .collect();
        let mut phi = Vec::with_capacity(n);
        let mut psi = Vec::with_capacity(n);
        let mut value = Vec::with_capacity(n);
        let mut witness = Vec::with_capacity(n);
        for r in rows {
            let (p, s, v, w) = r?;
            phi.push(p);
            psi.push(s);
            value.push(v);
            witness.push(w);
        }
        Ok(LyapunovTable { grid: self.grid.clone(), phi, psi, value, witness })
    }

    /// Decay certificate: for each sample `x`,
    /// `(V(S(h)x) - V(x))/h ≤ -v(x)/2` with `v(x) > 0`.
    ///
    /// Both sides are evaluated on one shared trajectory per sample; the
    /// level differences go through `expm1` of the radial drop so saturation
    /// near `V_k = 1` cannot silently zero out the left-hand side.
    pub fn dini_certificate(&self, samples: &[Vec<f64>]) -> Result<DiniReport, LyapunovError> {
        let h = self.params.h;
        let results: Vec<Result<(f64, Option<DiniViolation>), LyapunovError>> = samples
            .par_iter()
            .map(|x| {
                let trace = self.trace(x)?;
                let at0 = self.eval_trace(&trace, 0)?;
                let at1 = self.eval_trace(&trace, 1)?;
                let mut drop = 0.0;
                for (l0, l1) in at0.levels.iter().zip(&at1.levels) {
                    drop += level_drop(l0, l1);
                }
                let rate = -drop / h;
                let bound = -at0.witness / 2.0;
                let margin = drop / h - at0.witness / 2.0;
                let bad = !(rate <= bound) || !(at0.witness > 0.0);
                let violation = bad.then(|| DiniViolation {
                    point: x.clone(),
                    rate,
                    bound,
                    witness: at0.witness,
                });
                Ok((margin, violation))
            })
            .collect();
        let mut worst = f64::INFINITY;
        let mut violations = Vec::new();
        for r in results {
            let (margin, violation) = r?;
            worst = worst.min(margin);
            if let Some(v) = violation {
                violations.push(v);
            }
        }
        Ok(DiniReport { checked: samples.len(), worst_margin: worst, pass: violations.is_empty(), violations })
    }

    fn check_no_critical_value(&self, a: f64, b: f64) -> Result<(), LyapunovError> {
        for &(lo, hi) in &self.critical_ranges {
            if hi >= a && lo <= b {
                return Err(LyapunovError::CriticalValueInRange { value: lo, a, b });
            }
        }
        Ok(())
    }

    /// First time the trajectory's `V` falls to `a`, bisected on the final
    /// step until `|V - a| ≤ 1e-6 (b - a)`; zero when `V(x) ≤ a` already.
    pub fn exit_time(&self, x: &[f64], a: f64, b: f64) -> Result<f64, LyapunovError> {
        if !(a < b) {
            return Err(LyapunovError::Precondition(format!("need a < b, got a={a}, b={b}")));
        }
        self.check_no_critical_value(a, b)?;
        let v0 = self.evaluate(x)?.value;
        if v0 > b + 1e-9 {
            return Err(LyapunovError::Precondition(format!("V(x) = {v0} exceeds b = {b}")));
        }
        if v0 <= a {
            return Ok(0.0);
        }
        let tol = 1e-6 * (b - a);
        let trace = self.trace(x)?;
        let mut prev_node = 0;
        for i in 1..trace.len() {
            let v = self.eval_trace(&trace, i)?.value;
            if v <= a {
                // bisect within (t_{i-1}, t_i]
                let base = trace.position(prev_node).to_vec();
                let t0 = prev_node as f64 * trace.h;
                let mut lo = 0.0;
                let mut hi = trace.h;
                let mut best = hi;
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    let y = if mid == 0.0 { base.clone() } else { partial_step(&self.field, &base, mid) };
                    let vm = self.evaluate(&y)?.value;
                    if (vm - a).abs() <= tol {
                        best = mid;
                        break;
                    }
                    if vm > a {
                        lo = mid;
                    } else {
                        hi = mid;
                        best = mid;
                    }
                }
                return Ok(t0 + best);
            }
            prev_node = i;
        }
        Err(LyapunovError::NonConvergence { t_max: self.params.t_max })
    }

    /// Deformation along the flow: `H(σ, x) = S(σ t(x)) x`; `H(0, ·)` is the
    /// identity and the sublevel set `V ≤ a` stays pointwise fixed.
    pub fn retract(&self, sigma: f64, x: &[f64], a: f64, b: f64) -> Result<Vec<f64>, LyapunovError> {
        if sigma == 0.0 || self.evaluate(x)?.value <= a {
            return Ok(x.to_vec());
        }
        let t = self.exit_time(x, a, b)?;
        let target = sigma * t;
        if target == 0.0 {
            return Ok(x.to_vec());
        }
        Ok(integrate(&self.field, x, self.params.h.min(target), target)?.last().to_vec())
    }

    /// Certify that Morse set `k` (1-based) is a single equilibrium
    /// component: connected cover whose centroid lies in the cover with
    /// `|field| ≤ tol` there.
    pub fn certify_equilibrium(&self, k: usize, tol: f64) -> Result<Vec<f64>, LyapunovError> {
        let cover = &self.morse_covers[k - 1];
        if cover.connected_components().len() != 1 {
            return Err(LyapunovError::NotEquilibrium { k });
        }
        let dim = self.grid.dim();
        let mut centroid = vec![0.0; dim];
        let mut count = 0.0;
        for b in cover.iter() {
            for (a, v) in self.grid.box_center(b).into_iter().enumerate() {
                centroid[a] += v;
            }
            count += 1.0;
        }
        for v in centroid.iter_mut() {
            *v /= count;
        }
        let inside = self.grid.box_of_point(&centroid).map_or(false, |b| cover.contains(b));
        let mut f = vec![0.0; dim];
        self.field.eval(&centroid, &mut f);
        let speed = f.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !inside || speed > tol {
            return Err(LyapunovError::NotEquilibrium { k });
        }
        Ok(centroid)
    }

    /// Flow `x` down to the critical level `c` of an equilibrium Morse set:
    /// the first point with `V ≤ c + value_tol`, or the converged point when
    /// the state stalls while `V` plateaus. The result must end up within two
    /// box widths of the equilibrium component or inside the `V ≤ c` cover.
    pub fn equilibrium_limit(
        &self,
        x: &[f64],
        k: usize,
        b: f64,
        value_tol: f64,
        field_tol: f64,
    ) -> Result<Vec<f64>, LyapunovError> {
        let equilibrium = self.certify_equilibrium(k, field_tol)?;
        let c = self.critical_ranges[k - 1].1;
        if !(b > c) {
            return Err(LyapunovError::Precondition(format!("need b > c, got b={b}, c={c}")));
        }
        for (j, &(lo, hi)) in self.critical_ranges.iter().enumerate() {
            if j + 1 != k && hi > c + value_tol && lo <= b {
                return Err(LyapunovError::CriticalValueInRange { value: lo, a: c, b });
            }
        }
        let v0 = self.evaluate(x)?.value;
        if v0 > b + 1e-9 {
            return Err(LyapunovError::Precondition(format!("V(x) = {v0} exceeds b = {b}")));
        }

        let trace = self.trace(x)?;
        let dim = self.grid.dim();
        let mut result = None;
        for i in 0..trace.len() {
            let v = self.eval_trace(&trace, i)?.value;
            if v <= c + value_tol {
                result = Some(trace.position(i).to_vec());
                break;
            }
            if i >= 10 {
                let prev = trace.position(i - 10);
                let now = trace.position(i);
                let moved: f64 = (0..dim).map(|a| (now[a] - prev[a]).powi(2)).sum::<f64>().sqrt();
                if moved / (10.0 * trace.h) < value_tol {
                    result = Some(now.to_vec());
                    break;
                }
            }
        }
        let Some(point) = result else {
            return Err(LyapunovError::NonConvergence { t_max: self.params.t_max });
        };
        let dist: f64 = {
            let mut best = f64::INFINITY;
            for bx in self.morse_covers[k - 1].iter() {
                best = best.min(self.grid.distance_to_box(bx, &point));
            }
            best
        };
        let near = dist <= 2.0 * self.grid.max_width()
            || self.evaluate(&point)?.value <= c + value_tol
            || {
                let d: f64 = (0..dim).map(|a| (point[a] - equilibrium[a]).powi(2)).sum::<f64>().sqrt();
                d <= 2.0 * self.grid.max_width()
            };
        if !near {
            return Err(LyapunovError::NonConvergence { t_max: self.params.t_max });
        }
        Ok(point)
    }
}

fn outside_values() -> LevelValues {
    LevelValues {
        membership: Membership::Outside,
        phi: f64::INFINITY,
        psi: f64::INFINITY,
        radial: f64::INFINITY,
        value: 1.0,
        witness: 0.0,
    }
}

fn core_values() -> LevelValues {
    LevelValues { membership: Membership::Core, phi: 0.0, psi: 0.0, radial: 0.0, value: 0.0, witness: 0.0 }
}

fn assemble(levels: Vec<LevelValues>) -> PointEval {
    let value = levels.iter().map(|l| l.value).sum();
    let witness = levels.iter().map(|l| l.witness).sum();
    PointEval { levels, value, witness }
}

/// `V_k(x) - V_k(S(h)x)` evaluated without cancellation: the drop of
/// `1 - e^{-L}` is `e^{-L(y)} (1 - e^{-(L(x)-L(y))})`.
fn level_drop(at0: &LevelValues, at1: &LevelValues) -> f64 {
    use Membership::*;
    match (at0.membership, at1.membership) {
        (Outside, Outside) => 0.0,
        (Outside, _) => (-at1.radial).exp(),
        (_, Outside) => -(-at0.radial).exp(),
        _ => {
            let d = at0.radial - at1.radial;
            (-at1.radial).exp() * (-(-d).exp_m1())
        }
    }
}

fn partial_step(field: &VectorField, x: &[f64], dt: f64) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    rk4_step(field, x, dt, &mut out);
    out
}
