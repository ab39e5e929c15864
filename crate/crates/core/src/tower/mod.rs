//! The exhaustion limit over `Ω_n`, the saddle tower assembled from its
//! conjugate piece, curvature estimates and the Scherk model at the ends.

mod assembly;
mod curvature;
mod limit;
mod scherk;

use thiserror::Error;

use crate::conjugation::{ConjugationError, KrustReport};
use crate::domain::{DomainClass, DomainError};
use crate::solver::SolverError;

pub use assembly::{build_tower, build_tower_with, Provenance, SymmetryReport, TowerMesh, TowerOptions};
pub use curvature::{angle_defect, curvature_at, curvature_estimate, CurvatureReport};
pub use limit::{solve_limit, ConvergenceReport, LimitOptions, LimitRun};
pub use scherk::{
    asymptotic_compare, asymptotic_frame_vertex, deviation_at, scherk_half_plane, scherk_jet, scherk_reference,
    AsymptoticDeviation, EndSign, ScherkAsymptote, ScherkJet, Window,
};

#[derive(Debug, Error)]
pub enum TowerError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("n = {n}: {source}")]
    Solver { n: usize, source: SolverError },
    #[error(transparent)]
    Conjugation(#[from] ConjugationError),
    #[error("unsupported domain class {0:?}")]
    UnsupportedClass(DomainClass),
    #[error("invalid option: {0}")]
    InvalidOption(String),
    #[error("conjugate function range [{min:.4}, {max:.4}] leaves [0, 1] by more than {tol}")]
    PsiBounds { min: f64, max: f64, tol: f64 },
    #[error("conjugate piece is not a graph: {} flipped, {} overlapping samples", .0.flipped, .0.overlaps)]
    NotGraph(Box<KrustReport>),
    #[error("polygon vertex {vertex} sits at height {height:.4}, expected {expected}")]
    WeldMismatch { vertex: usize, height: f64, expected: f64 },
    #[error("quadratic fit failed at node {0}")]
    CurvatureFit(usize),
    #[error("window point ({0:.4}, {1:.4}) is outside the domain")]
    WindowOutside(f64, f64),
    #[error("Scherk evaluator fails the minimal surface equation (residual {0:.3e})")]
    ScherkValidation(f64),
}
