//! Jenkins–Serrin solutions by truncation: data `±M` on the marked edges for
//! an increasing schedule of `M`, normalized by `u(Q) = 0`.
//!
//! The truncated data is imposed through the relaxed area functional
//! `∫ W + ∫_∂Ω |u − φ|`, so boundary nodes carry the trace of the solution
//! and the vertical part of the graph above `∂Ω` is accounted for exactly by
//! the boundary integral.

use std::sync::Arc;

use super::diagnostics::{detect_divergence_lines_with, DivergenceOptions};
use super::newton::{minimize, Relaxation};
use super::{GraphSolution, SolveOptions, SolverError};
use crate::domain::{chord_criterion, MarkedPolygon};
use crate::geometry::P2;
use crate::mesh::{triangulate_with_points, NodeKind, TriMesh};

#[derive(Debug, Clone, PartialEq)]
pub struct JsOptions {
    pub h: f64,
    pub m_schedule: Vec<f64>,
    /// Sup-norm stabilization threshold on the compact subset.
    pub tol_js: f64,
    /// The compact subset is `{dist(·, ∂Ω) ≥ compact_dist}`.
    pub compact_dist: f64,
    /// Solve even when the chord criterion fails.
    pub force: bool,
    /// Run the whole schedule instead of stopping at stabilization.
    pub full_schedule: bool,
    pub solve: SolveOptions,
    pub divergence: DivergenceOptions,
}

impl Default for JsOptions {
    fn default() -> Self {
        Self {
            h: 1.0 / 32.0,
            m_schedule: vec![2.0, 4.0, 8.0, 16.0],
            tol_js: 1e-3,
            compact_dist: 0.1,
            force: false,
            full_schedule: false,
            solve: SolveOptions::default(),
            divergence: DivergenceOptions::default(),
        }
    }
}

impl JsOptions {
    pub fn with_h(h: f64) -> Self {
        Self { h, ..Self::default() }
    }

    fn validate(&self) -> Result<(), SolverError> {
        if self.m_schedule.len() < 2 {
            return Err(SolverError::InvalidOption("the truncation schedule needs at least two values".into()));
        }
        if self.m_schedule.iter().any(|m| !(*m > 0.0 && m.is_finite()))
            || self.m_schedule.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(SolverError::InvalidOption(format!(
                "truncation schedule {:?} must be positive and increasing",
                self.m_schedule
            )));
        }
        if !(self.tol_js > 0.0 && self.compact_dist >= 0.0) {
            return Err(SolverError::InvalidOption("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Truncated data `±M` by edge mark, `0` at polygon vertices and interior
/// nodes.
pub fn jenkins_serrin_boundary(mesh: &TriMesh, m: f64) -> Vec<f64> {
    mesh.kinds()
        .iter()
        .map(|k| match *k {
            NodeKind::Edge(i) => m * mesh.polygon().mark(i).sign(),
            NodeKind::Vertex(_) | NodeKind::Interior => 0.0,
        })
        .collect()
}

/// Outcome of a truncation schedule.
#[derive(Debug, Clone)]
pub struct JsRun {
    /// Normalized solution for each `M` that was solved.
    pub solutions: Vec<GraphSolution>,
    /// Sup change between consecutive normalized solutions on the compact.
    pub changes: Vec<f64>,
    pub stabilized: bool,
    /// Mesh node at the normalization point.
    pub q_node: usize,
}

/// Solves along the schedule and returns the last solution once the sup
/// change on the compact subset falls below `tol_js` and no divergence line
/// is found in it.
pub fn solve_jenkins_serrin(poly: &MarkedPolygon, q: P2, opts: &JsOptions) -> Result<GraphSolution, SolverError> {
    let run = run_jenkins_serrin(poly, q, opts)?;
    let report = detect_divergence_lines_with(&run.solutions, &opts.divergence)?;
    if run.stabilized {
        if report.converges {
            return Ok(run.solutions.last().cloned().expect("nonempty schedule"));
        }
        return Err(SolverError::Divergence { report: Box::new(report) });
    }
    Err(SolverError::NotStabilized {
        last_change: run.changes.last().copied().unwrap_or(f64::INFINITY),
        report: Box::new(report),
    })
}

/// Runs the schedule, keeping every intermediate solution.
pub fn run_jenkins_serrin(poly: &MarkedPolygon, q: P2, opts: &JsOptions) -> Result<JsRun, SolverError> {
    opts.validate()?;
    if !opts.force {
        if let Some(chord) = chord_criterion(poly).witness {
            return Err(SolverError::ChordCriterion { chord });
        }
    }
    if !poly.contains(q, 0.0) || poly.boundary_distance(q) <= 0.0 {
        return Err(SolverError::BadNormalization(q.x, q.y));
    }
    let mesh = Arc::new(triangulate_with_points(poly, opts.h, &[q])?);
    let q_node = mesh.nearest_node(q);
    debug_assert_eq!(mesh.point(q_node), q);
    let dist = mesh.boundary_distances();
    let compact: Vec<usize> = (0..mesh.num_nodes()).filter(|&v| dist[v] >= opts.compact_dist).collect();

    let free = vec![false; mesh.num_nodes()];
    let mut solutions: Vec<GraphSolution> = Vec::new();
    let mut changes = Vec::new();
    let mut raw: Option<Vec<f64>> = None;
    let mut stabilized = false;
    for &m in &opts.m_schedule {
        let relax = relaxation(&mesh, m);
        let start = raw.take().unwrap_or_else(|| vec![0.0; mesh.num_nodes()]);
        let sol = minimize(mesh.clone(), start, &free, Some(&relax), &opts.solve)?;
        raw = Some(sol.values().to_vec());
        let sol = sol.shifted(-sol.value(q_node)).with_truncation(Some(m));
        if let Some(prev) = solutions.last() {
            let change = compact
                .iter()
                .map(|&v| (sol.value(v) - prev.value(v)).abs())
                .fold(0.0, f64::max);
            changes.push(change);
            stabilized = change <= opts.tol_js;
        }
        solutions.push(sol);
        if stabilized && !opts.full_schedule {
            break;
        }
    }
    Ok(JsRun { solutions, changes, stabilized, q_node })
}


/// Smoothing width of `|u − φ|` in the boundary term.
pub(crate) const RELAXATION_EPS: f64 = 1e-3;

fn relaxation(mesh: &TriMesh, m: f64) -> Relaxation {
    let edges = mesh
        .boundary_edges()
        .iter()
        .map(|b| {
            let len = (mesh.point(b.nodes[1]) - mesh.point(b.nodes[0])).norm();
            (b.nodes, len, m * b.mark.sign())
        })
        .collect();
    Relaxation { edges, eps: RELAXATION_EPS }
}

