//! End-to-end orchestration: grid → outer maps → Morse graph → filtration →
//! Lyapunov field → homology report.
//!
//! Three outer maps play different roles. The artifact map carries the
//! configured bloat and is what gets saved and checked for the
//! over-approximation property. Structure (hulls, basins, invariance) runs on
//! the raw hit map at the same map time: a bloated image gains a ring per
//! application, which ratchets fixed-point constructions outward through any
//! region where the flow crosses less than a box per step. Recurrence runs on
//! a hit map at `recurrence_factor · tau`: short-time maps leave spurious
//! fixed boxes wherever the per-step displacement is below one box width.

use std::sync::Arc;

use thiserror::Error;

use crate::flow::VectorField;
use crate::grid::{CubicalGrid, CubicalSet, GridError};
use crate::homology::{
    basin_betti, critical_group_table, quotient_basin_betti, BettiVector, CriticalGroupTable, HomologyError,
    HomologyField,
};
use crate::lyapunov::{LyapunovError, LyapunovParams, LyapunovTable, MorseLyapunov};
use crate::morse::{condense_merged, filtration, MorseError, MorseFiltration, MorseGraph};
use crate::outer::{OuterError, OuterMap, OuterParams};
use crate::report::MorseReport;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("grid stage: {0}")]
    Grid(#[from] GridError),
    #[error("outer-map stage: {0}")]
    Outer(#[from] OuterError),
    #[error("morse stage: {0}")]
    Morse(#[from] MorseError),
    #[error("lyapunov stage: {0}")]
    Lyapunov(#[from] LyapunovError),
    #[error("homology stage: {0}")]
    Homology(#[from] HomologyError),
}

/// Parameters of a full analysis run.
#[derive(Debug, Clone)]
pub struct AnalysisConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub depth: Vec<usize>,
    /// Map time of the saved outer map and of all structural constructions.
    pub tau: f64,
    /// Integration step (outer maps and Lyapunov trajectories).
    pub h: f64,
    pub samples_per_axis: usize,
    /// Bloat rings of the artifact map.
    pub bloat_rings: usize,
    /// Recurrence detection runs at `recurrence_factor * tau`.
    pub recurrence_factor: f64,
    /// Exponential weight of the Lyapunov integral.
    pub lambda: f64,
    /// Trajectory horizon; defaults to `50 * tau`.
    pub t_max: f64,
    pub truncation_tol: f64,
    pub field: HomologyField,
}

impl AnalysisConfig {
    /// Defaults used throughout: domain `[-2,2]^2`, `tau = 0.5`, `h = 0.01`,
    /// 3 samples per axis, one bloat ring on the artifact map, recurrence at
    /// `10 tau`, `lambda = 0.25`.
    pub fn standard(depth: usize) -> Self {
        Self {
            lower: vec![-2.0, -2.0],
            upper: vec![2.0, 2.0],
            depth: vec![depth, depth],
            tau: 0.5,
            h: 1e-2,
            samples_per_axis: 3,
            bloat_rings: 1,
            recurrence_factor: 10.0,
            lambda: 0.25,
            t_max: 25.0,
            truncation_tol: 1e-9,
            field: HomologyField::Z2,
        }
    }

    pub fn lyapunov_params(&self) -> LyapunovParams {
        LyapunovParams {
            lambda: self.lambda,
            t_max: self.t_max,
            h: self.h,
            truncation_tol: self.truncation_tol,
            alpha_scale: 1.0,
        }
    }
}

/// Staged results of a run, up to the Morse filtration.
pub struct Analysis {
    pub field: VectorField,
    pub config: AnalysisConfig,
    pub grid: Arc<CubicalGrid>,
    /// Artifact map at the configured bloat.
    pub outer: OuterMap,
    /// Raw hit map at the same time (structure).
    pub hit_map: OuterMap,
    /// Raw hit map at the recurrence time.
    pub recurrence_map: OuterMap,
    pub graph: MorseGraph,
    pub filt: MorseFiltration,
}

impl Analysis {
    /// Run the combinatorial stages.
    pub fn run(field: VectorField, config: AnalysisConfig) -> Result<Self, PipelineError> {
        let grid = Arc::new(CubicalGrid::new(config.lower.clone(), config.upper.clone(), config.depth.clone())?);
        let base = OuterParams {
            tau: config.tau,
            h: config.h,
            samples_per_axis: config.samples_per_axis,
            bloat_rings: config.bloat_rings,
        };
        let outer = OuterMap::build(grid.clone(), &field, base)?;
        let hit_map = if config.bloat_rings == 0 {
            outer.clone()
        } else {
            OuterMap::build(grid.clone(), &field, OuterParams { bloat_rings: 0, ..base })?
        };
        let recurrence_map = OuterMap::build(
            grid.clone(),
            &field,
            OuterParams { tau: config.tau * config.recurrence_factor, bloat_rings: 0, ..base },
        )?;
        let graph = condense_merged(&recurrence_map);
        let filt = filtration(&graph, &hit_map, &recurrence_map)?;
        Ok(Self { field, config, grid, outer, hit_map, recurrence_map, graph, filt })
    }

    /// The strict Morse-Lyapunov construction at the configured parameters.
    pub fn lyapunov(&self) -> Result<MorseLyapunov, PipelineError> {
        Ok(MorseLyapunov::build(&self.field, &self.hit_map, &self.graph, &self.filt, self.config.lyapunov_params())?)
    }

    /// A structurally different strict M-L function (other λ, scaled α).
    pub fn lyapunov_variant(&self, lambda: f64, alpha_scale: f64) -> Result<MorseLyapunov, PipelineError> {
        let params = self.config.lyapunov_params().with_variant(lambda, alpha_scale);
        Ok(MorseLyapunov::build(&self.field, &self.hit_map, &self.graph, &self.filt, params)?)
    }

    /// Critical groups (plain and quotient) plus basin Betti vectors.
    pub fn homology(&self) -> Result<HomologyResult, PipelineError> {
        let table = critical_group_table(&self.hit_map, &self.graph, &self.filt, self.config.field)?;
        let basin = basin_betti(&self.filt, self.config.field)?;
        let quotient_basin = quotient_basin_betti(&self.graph, &self.filt, self.config.field)?;
        Ok(HomologyResult { table, basin, quotient_basin })
    }

    pub fn report(&self, system: &str, hom: &HomologyResult) -> MorseReport {
        MorseReport::from_table(
            system,
            &self.config.depth,
            self.graph.components().iter().map(|c| c.len()).collect(),
            &hom.table,
            &hom.basin,
            &hom.quotient_basin,
        )
    }

    /// Sample points for certificates: uniform box centers of every box off a
    /// 2-box collar of the recurrent set, of every attractor, and of the
    /// global basin boundary.
    pub fn certificate_exclusion(&self) -> CubicalSet {
        let mut excluded = self.graph.recurrent_set().collar(2);
        let outside = self.filt.basin(self.filt.len()).complement();
        excluded = excluded.union(&outside.collar(2));
        for k in 1..=self.filt.len() {
            excluded = excluded.union(&self.filt.attractor(k).collar(2));
        }
        excluded
    }
}

pub struct HomologyResult {
    pub table: CriticalGroupTable,
    pub basin: BettiVector,
    pub quotient_basin: BettiVector,
}

/// Component counts and Morse/Betti numbers at two depths, for a stability
/// comparison of the non-rigorous outer approximation.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DepthComparison {
    pub depth_a: usize,
    pub depth_b: usize,
    pub components_a: usize,
    pub components_b: usize,
    pub morse_a: Vec<usize>,
    pub morse_b: Vec<usize>,
    pub betti_a: Vec<usize>,
    pub betti_b: Vec<usize>,
    pub agree: bool,
}

pub fn compare_depths(
    field: &VectorField,
    config: &AnalysisConfig,
    depth_a: usize,
    depth_b: usize,
) -> Result<DepthComparison, PipelineError> {
    let run = |depth: usize| -> Result<(usize, Vec<usize>, Vec<usize>), PipelineError> {
        let mut c = config.clone();
        c.depth = vec![depth; c.lower.len()];
        let analysis = Analysis::run(field.clone(), c)?;
        let hom = analysis.homology()?;
        let m = crate::homology::morse_numbers(&hom.table.groups);
        Ok((analysis.graph.len(), m, hom.basin.ranks))
    };
    let (ca, ma, ba) = run(depth_a)?;
    let (cb, mb, bb) = run(depth_b)?;
    let agree = ca == cb && ma == mb && ba == bb;
    Ok(DepthComparison {
        depth_a,
        depth_b,
        components_a: ca,
        components_b: cb,
        morse_a: ma,
        morse_b: mb,
        betti_a: ba,
        betti_b: bb,
        agree,
    })
}

/// Everything the CLI writes to disk for one run.
pub struct FullRun {
    pub analysis: Analysis,
    pub lyapunov: MorseLyapunov,
    pub table: LyapunovTable,
    pub homology: HomologyResult,
    pub report: MorseReport,
}

pub fn full_run(system: &str, field: VectorField, config: AnalysisConfig) -> Result<FullRun, PipelineError> {
    let analysis = Analysis::run(field, config)?;
    let lyapunov = analysis.lyapunov()?;
    let table = lyapunov.box_table()?;
    let homology = analysis.homology()?;
    let report = analysis.report(system, &homology);
    Ok(FullRun { analysis, lyapunov, table, homology, report })
}
