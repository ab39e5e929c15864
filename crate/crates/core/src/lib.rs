//! Saddle towers with infinitely many ends, numerically.
//!
//! The pipeline runs bottom-up through the modules:
//!
//! - [`domain`]: marked convex unitary polygons, unbounded domain generators,
//!   solvability criteria and the exhaustion `Ω_n`.
//! - [`mesh`]: constrained Delaunay triangulation with corner grading and
//!   point location.
//! - [`solver`]: the minimal graph equation with truncated `±∞` data
//!   (damped Newton on the discrete area functional), divergence-line and
//!   vertex-gradient diagnostics.
//! - [`conjugation`]: the conjugate function `ψ`, edge fluxes, the
//!   conjugate immersion `X*` and the graph (Krust) check.
//! - [`tower`]: the exhaustion limit, tower assembly by reflection, curvature
//!   estimates and comparison with the Scherk half-plane solution.
//! - [`io`]: domain specification files, mesh dumps and OBJ/PLY export.

pub mod conjugation;
pub mod domain;
pub mod geometry;
pub mod io;
pub mod mesh;
pub mod solver;
pub mod tower;

pub use conjugation::{ConjugateFunction, ConjugateSolution, KrustReport};
pub use domain::{DomainClass, DomainError, Mark, MarkedPolygon, UnboundedDomainSpec};
pub use mesh::{NodeKind, TriMesh};
pub use solver::{DivergenceReport, GraphSolution, JsOptions, SolveOptions};
pub use tower::{ConvergenceReport, ScherkAsymptote, TowerMesh};
