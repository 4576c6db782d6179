//! Combinatorial Morse theory of attractors on cubical grids.
//!
//! The crate discovers the Morse decomposition of a vector field's attractor
//! from a box-level outer approximation of the flow map, constructs numerical
//! Morse-Lyapunov functions together with their decay certificates and
//! deformation retractions, and computes critical groups, Morse/Betti numbers
//! and the Morse inequalities via relative cubical homology over a field.
//!
//! Pipeline: [`grid`] (cubical grids and box sets) → [`flow`] (vector fields,
//! RK4 trajectories) → [`outer`] (multivalued box map) → [`morse`] (recurrent
//! components, attractor filtration) → [`lyapunov`] (Morse-Lyapunov values and
//! certificates) → [`homology`] (critical groups, Morse inequalities) →
//! [`report`].

pub mod flow;
pub mod grid;
pub mod homology;
pub mod lyapunov;
pub mod morse;
pub mod outer;
pub mod pipeline;
pub mod report;

pub use flow::{flow_map, integrate, FlowError, PolyField, PolyTerm, Trajectory, VectorField};
pub use grid::{BoxId, CubicalGrid, CubicalSet, GridError};
pub use homology::{betti, euler, BettiVector, CriticalGroupTable, HomologyError, HomologyField};
pub use lyapunov::{LyapunovError, LyapunovParams, MorseLyapunov};
pub use morse::{combinatorial_attractor, condense, condense_merged, filtration, MorseError, MorseFiltration, MorseGraph};
pub use outer::{OuterError, OuterMap, OuterParams};
pub use pipeline::{compare_depths, full_run, Analysis, AnalysisConfig, PipelineError};
pub use report::MorseReport;
