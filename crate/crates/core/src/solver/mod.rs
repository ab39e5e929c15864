//! Minimal graphs over triangulated polygons.
//!
//! The discrete problem minimizes `Σ_T A_T (√(1 + |∇u_T|²) − 1)` over
//! piecewise-linear `u` with prescribed boundary values. Its Euler–Lagrange
//! equation is the minimal graph equation
//! `(1 + u₂²)u₁₁ − 2u₁u₂u₁₂ + (1 + u₁²)u₂₂ = 0`.

mod diagnostics;
mod jenkins_serrin;
mod newton;

use std::sync::Arc;

use thiserror::Error;

pub use diagnostics::{
    detect_divergence_lines, detect_divergence_lines_with, vertex_gradient_check, DivergenceOptions,
    DivergenceReport, DivergenceSegment, VertexGradient,
};
pub use jenkins_serrin::{jenkins_serrin_boundary, run_jenkins_serrin, solve_jenkins_serrin, JsOptions, JsRun};
pub use newton::{solve_dirichlet, solve_dirichlet_from};
pub(crate) use newton::least_squares_potential;

use crate::domain::{Chord, DomainError};
use crate::geometry::V2;
use crate::mesh::{MeshError, TriMesh};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("Newton iteration did not converge after {iterations} steps (gradient norms {history:?})")]
    NonConvergence { iterations: usize, history: Vec<f64> },
    #[error("boundary value at node {0} is not finite")]
    NonFiniteBoundary(usize),
    #[error("Hessian factorization failed: {0}")]
    Factorization(String),
    #[error("nodal vector has length {got}, mesh has {expected} nodes")]
    Length { got: usize, expected: usize },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("chord criterion fails: chord {chord:?} has length {}", chord.length)]
    ChordCriterion { chord: Chord },
    #[error("normalization point ({0}, {1}) is not interior")]
    BadNormalization(f64, f64),
    #[error("solutions did not stabilize over the truncation schedule (last change {last_change}); {report}")]
    NotStabilized { last_change: f64, report: Box<DivergenceReport> },
    #[error("truncated solutions stabilized but show a divergence line; {report}")]
    Divergence { report: Box<DivergenceReport> },
    #[error("invalid option: {0}")]
    InvalidOption(String),
    #[error("no mesh nodes in the disk around vertex {0}")]
    EmptyDisk(usize),
    #[error("solution domains do not overlap enough for comparison")]
    InsufficientOverlap,
    #[error("need at least two solutions")]
    TooFewSolutions,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Stopping tolerance on the Euclidean norm of the functional's gradient.
    pub tol_solve: f64,
    pub max_iter: usize,
    /// Armijo constant of the backtracking line search.
    pub armijo: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol_solve: 1e-10, max_iter: 200, armijo: 1e-4 }
    }
}

/// Piecewise-linear function on a mesh with its per-triangle gradient.
#[derive(Debug, Clone)]
pub struct GraphSolution {
    mesh: Arc<TriMesh>,
    u: Vec<f64>,
    truncation: Option<f64>,
    gradients: Vec<V2>,
    w: Vec<f64>,
    residual: f64,
    iterations: usize,
}

impl GraphSolution {
    /// Wraps given nodal values. The residual is the gradient norm of the
    /// discrete area functional over interior nodes.
    pub fn from_nodal(mesh: Arc<TriMesh>, u: Vec<f64>) -> Result<Self, SolverError> {
        if u.len() != mesh.num_nodes() {
            return Err(SolverError::Length { got: u.len(), expected: mesh.num_nodes() });
        }
        let residual = newton::functional_gradient_norm(&mesh, &u);
        Ok(Self::assemble(mesh, u, None, residual, 0))
    }

    pub(crate) fn assemble(
        mesh: Arc<TriMesh>,
        u: Vec<f64>,
        truncation: Option<f64>,
        residual: f64,
        iterations: usize,
    ) -> Self {
        let gradients: Vec<V2> = (0..mesh.num_triangles()).map(|t| triangle_gradient(&mesh, &u, t)).collect();
        let w = gradients.iter().map(|g| (1.0 + g.norm_squared()).sqrt()).collect();
        Self { mesh, u, truncation, gradients, w, residual, iterations }
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<TriMesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }

    pub fn value(&self, v: usize) -> f64 {
        self.u[v]
    }

    /// Truncation level `M` for Jenkins–Serrin solves.
    pub fn truncation(&self) -> Option<f64> {
        self.truncation
    }

    pub fn gradients(&self) -> &[V2] {
        &self.gradients
    }

    pub fn gradient(&self, t: usize) -> V2 {
        self.gradients[t]
    }

    /// `W = √(1 + |∇u|²)` per triangle.
    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Area-weighted average of the adjacent triangle gradients at each node.
    pub fn nodal_gradients(&self) -> Vec<V2> {
        let n = self.mesh.num_nodes();
        let mut acc = vec![V2::zeros(); n];
        let mut wsum = vec![0.0; n];
        for (t, tri) in self.mesh.triangles().iter().enumerate() {
            let a = self.mesh.area(t);
            for &v in tri {
                acc[v] += self.gradients[t] * a;
                wsum[v] += a;
            }
        }
        acc.iter().zip(&wsum).map(|(g, &s)| g / s).collect()
    }

    /// Piecewise-linear evaluation at `p`, if `p` is in the mesh.
    pub fn eval(&self, p: crate::geometry::P2) -> Option<f64> {
        self.mesh.locator().interpolate(&self.u, p)
    }

    /// Same solution shifted by a constant.
    pub fn shifted(&self, c: f64) -> Self {
        let mut out = self.clone();
        for x in &mut out.u {
            *x += c;
        }
        out
    }

    pub(crate) fn with_truncation(mut self, m: Option<f64>) -> Self {
        self.truncation = m;
        self
    }
}

pub(crate) fn triangle_gradient(mesh: &TriMesh, u: &[f64], t: usize) -> V2 {
    let tri = mesh.triangles()[t];
    let g = mesh.hat_gradients(t);
    g[0] * u[tri[0]] + g[1] * u[tri[1]] + g[2] * u[tri[2]]
}
