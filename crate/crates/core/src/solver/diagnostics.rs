//! Divergence lines and vertex gradient blow-up.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix2, SymmetricEigen};
use serde::Serialize;

use super::{GraphSolution, SolverError};
use crate::geometry::{clip_line_convex, perp, P2, V2};
use crate::mesh::Locator;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceOptions {
    /// Triangles with `W` above this are candidates.
    pub w_div: f64,
    /// Minimum flux ratio is `1 − eps_div`.
    pub eps_div: f64,
    /// Clusters shorter than this are ignored.
    pub min_extent: f64,
    /// When set, candidates must also have `W` grown by at least this factor
    /// since the previous solution.
    pub growth: Option<f64>,
}

impl Default for DivergenceOptions {
    fn default() -> Self {
        Self { w_div: 50.0, eps_div: 0.05, min_extent: 0.1, growth: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceSegment {
    pub a: [f64; 2],
    pub b: [f64; 2],
    /// `|∫_T dψ| / |T|`.
    pub flux_ratio: f64,
    pub max_w: f64,
    /// Number of triangles in the cluster that produced the segment.
    pub triangles: usize,
}

impl DivergenceSegment {
    pub fn length(&self) -> f64 {
        ((self.b[0] - self.a[0]).powi(2) + (self.b[1] - self.a[1]).powi(2)).sqrt()
    }

    /// Hausdorff distance to the segment `[p, q]`.
    pub fn distance_to(&self, p: P2, q: P2) -> f64 {
        let a = P2::new(self.a[0], self.a[1]);
        let b = P2::new(self.b[0], self.b[1]);
        let d = crate::geometry::dist_point_segment;
        d(a, p, q).max(d(b, p, q)).max(d(p, a, b)).max(d(q, a, b))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceReport {
    pub segments: Vec<DivergenceSegment>,
    /// Candidates ending inside a marked edge; reported but not counted.
    pub artifacts: Vec<DivergenceSegment>,
    pub converges: bool,
}

impl fmt::Display for DivergenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.converges {
            return write!(f, "no divergence lines");
        }
        write!(f, "{} divergence line(s):", self.segments.len())?;
        for s in &self.segments {
            write!(
                f,
                " [({:.4}, {:.4}) - ({:.4}, {:.4}), flux ratio {:.4}]",
                s.a[0], s.a[1], s.b[0], s.b[1], s.flux_ratio
            )?;
        }
        Ok(())
    }
}

pub fn detect_divergence_lines(solutions: &[GraphSolution]) -> Result<DivergenceReport, SolverError> {
    detect_divergence_lines_with(solutions, &DivergenceOptions::default())
}

/// Looks for straight segments along which the latest solution has a large
/// gradient whose conjugate flux saturates the segment length.
pub fn detect_divergence_lines_with(
    solutions: &[GraphSolution],
    opts: &DivergenceOptions,
) -> Result<DivergenceReport, SolverError> {
    if solutions.len() < 2 {
        return Err(SolverError::TooFewSolutions);
    }
    let latest = &solutions[solutions.len() - 1];
    let prev = &solutions[solutions.len() - 2];
    let mesh = latest.mesh();
    let same_mesh = Arc::ptr_eq(latest.mesh_arc(), prev.mesh_arc());
    let centroid = |t: usize| {
        let [a, b, c] = mesh.corners(t);
        P2::from((a.coords + b.coords + c.coords) / 3.0)
    };

    let prev_locator = (!same_mesh).then(|| prev.mesh().locator());
    let prev_w: Vec<Option<f64>> = (0..mesh.num_triangles())
        .map(|t| match &prev_locator {
            None => Some(prev.w()[t]),
            Some(loc) => loc.locate(centroid(t)).map(|(pt, _)| prev.w()[pt]),
        })
        .collect();
    let overlap = prev_w.iter().filter(|w| w.is_some()).count() as f64 / mesh.num_triangles() as f64;
    let prev_area = 0.5 * crate::geometry::polygon_area2(prev.mesh().polygon().vertices());
    let latest_area = 0.5 * crate::geometry::polygon_area2(mesh.polygon().vertices());
    if overlap * latest_area < 0.25 * prev_area.min(latest_area) {
        return Err(SolverError::InsufficientOverlap);
    }

    let kinds = mesh.kinds();
    let hot: Vec<bool> = (0..mesh.num_triangles())
        .map(|t| {
            let w = latest.w()[t];
            w > opts.w_div
                && mesh.triangles()[t].iter().all(|&v| !kinds[v].is_boundary())
                && opts.growth.is_none_or(|g| prev_w[t].is_some_and(|pw| w >= g * pw))
        })
        .collect();

    let locator = mesh.locator();
    let mut seen = vec![false; mesh.num_triangles()];
    let mut segments = Vec::new();
    let mut artifacts = Vec::new();
    for seed in 0..mesh.num_triangles() {
        if !hot[seed] || seen[seed] {
            continue;
        }
        let mut cluster = Vec::new();
        let mut queue = VecDeque::from([seed]);
        seen[seed] = true;
        while let Some(t) = queue.pop_front() {
            cluster.push(t);
            for e in mesh.triangle_edges(t) {
                for s in mesh.edge_triangles(e) {
                    if s != usize::MAX && hot[s] && !seen[s] {
                        seen[s] = true;
                        queue.push_back(s);
                    }
                }
            }
        }
        if let Some((seg, artifact)) = fit_segment(latest, &locator, &cluster, opts, &centroid) {
            if artifact {
                artifacts.push(seg);
            } else {
                segments.push(seg);
            }
        }
    }
    if latest.truncation().is_some() {
        for seg in vertex_chords(latest, &locator, opts) {
            let h = mesh.h();
            let a = P2::new(seg.a[0], seg.a[1]);
            let b = P2::new(seg.b[0], seg.b[1]);
            segments.retain(|s| s.distance_to(a, b) > 2.0 * h);
            artifacts.retain(|s| s.distance_to(a, b) > 2.0 * h);
            segments.push(seg);
        }
    }
    Ok(DivergenceReport { converges: segments.is_empty(), segments, artifacts })
}

/// Flux ratio along `[a, b]` and the largest `W` on sampled triangles that do
/// not touch the boundary.
fn segment_flux(sol: &GraphSolution, locator: &Locator<'_>, a: P2, b: P2) -> (f64, f64) {
    let mesh = sol.mesh();
    let len = (b - a).norm();
    let dir = (b - a) / len;
    let samples = ((len / (0.25 * mesh.h())).ceil() as usize).max(8);
    let ds = len / samples as f64;
    let mut flux = 0.0;
    let mut max_w: f64 = 1.0;
    for s in 0..samples {
        let p = a + dir * ((s as f64 + 0.5) * ds);
        if let Some((t, _)) = locator.locate(p) {
            let w = sol.w()[t];
            flux += perp(sol.gradient(t)).dot(&dir) / w * ds;
            if mesh.triangles()[t].iter().all(|&v| !mesh.kind(v).is_boundary()) {
                max_w = max_w.max(w);
            }
        }
    }
    ((flux / len).abs(), max_w)
}

/// Chords between polygon vertices that pass the steepness and flux tests.
/// Divergence lines of Jenkins–Serrin sequences join vertices, and along a
/// balanced chord the steep zone may not form a connected cluster.
fn vertex_chords(sol: &GraphSolution, locator: &Locator<'_>, opts: &DivergenceOptions) -> Vec<DivergenceSegment> {
    let poly = sol.mesh().polygon();
    let n = poly.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (a, b) = (poly.vertex(i), poly.vertex(j));
            let mid = P2::from((a.coords + b.coords) * 0.5);
            if (b - a).norm() < opts.min_extent || poly.boundary_distance(mid) <= 10.0 * poly.tol_geom() {
                continue;
            }
            let (flux_ratio, max_w) = segment_flux(sol, locator, a, b);
            if max_w > opts.w_div && flux_ratio >= 1.0 - opts.eps_div {
                out.push(DivergenceSegment { a: [a.x, a.y], b: [b.x, b.y], flux_ratio, max_w, triangles: 0 });
            }
        }
    }
    out
}

/// Fits a line to a cluster of steep triangles and measures the flux along
/// its chord. Returns the segment and whether it is an artifact.
fn fit_segment(
    sol: &GraphSolution,
    locator: &Locator<'_>,
    cluster: &[usize],
    opts: &DivergenceOptions,
    centroid: &dyn Fn(usize) -> P2,
) -> Option<(DivergenceSegment, bool)> {
    let mesh = sol.mesh();
    let (mut lo, mut hi) = (V2::repeat(f64::INFINITY), V2::repeat(f64::NEG_INFINITY));
    let mut tensor = Matrix2::zeros();
    let mut cw = V2::zeros();
    let mut wsum = 0.0;
    for &t in cluster {
        let c = centroid(t).coords;
        lo = lo.inf(&c);
        hi = hi.sup(&c);
        let a = mesh.area(t);
        let w = sol.w()[t];
        let g = sol.gradient(t).normalize();
        tensor += g * g.transpose() * a;
        cw += c * (a * w);
        wsum += a * w;
    }
    if (hi - lo).norm() < opts.min_extent {
        return None;
    }
    let eig = SymmetricEigen::new(tensor);
    let k = if eig.eigenvalues[0] >= eig.eigenvalues[1] { 0 } else { 1 };
    let normal = V2::new(eig.eigenvectors[(0, k)], eig.eigenvectors[(1, k)]);
    let dir = perp(normal);
    let origin = P2::from(cw / wsum);
    let poly = mesh.polygon();
    let (t0, t1) = clip_line_convex(origin, dir, poly.vertices())?;
    if t1 - t0 < opts.min_extent {
        return None;
    }
    let (a, b) = (origin + dir * t0, origin + dir * t1);
    let (flux_ratio, _) = segment_flux(sol, locator, a, b);
    if flux_ratio < 1.0 - opts.eps_div {
        return None;
    }
    let max_w = cluster.iter().map(|&t| sol.w()[t]).fold(1.0, f64::max);
    let seg = DivergenceSegment { a: [a.x, a.y], b: [b.x, b.y], flux_ratio, max_w, triangles: cluster.len() };
    // a divergence line of a Jenkins–Serrin sequence joins polygon vertices
    let near_vertex = |p: P2| (0..poly.len()).any(|j| (poly.vertex(j) - p).norm() <= 2.0 * mesh.h());
    let artifact = sol.truncation().is_some() && !(near_vertex(a) && near_vertex(b));
    Some((seg, artifact))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VertexGradient {
    pub vertex: usize,
    /// Smallest nodal `W` over interior nodes in the disk.
    pub min_w: f64,
    pub nodes: usize,
    pub passes: bool,
}

/// Checks `W > 10` on the interior nodes of `D(p, δ r₀)` at every polygon
/// vertex `p`, using area-averaged nodal gradients.
pub fn vertex_gradient_check(sol: &GraphSolution, r0: f64, delta: f64) -> Result<Vec<VertexGradient>, SolverError> {
    let mesh = sol.mesh();
    let grads = sol.nodal_gradients();
    let radius = delta * r0;
    let poly = mesh.polygon();
    (0..poly.len())
        .map(|j| {
            let p = poly.vertex(j);
            let ws: Vec<f64> = (0..mesh.num_nodes())
                .filter(|&v| !mesh.kind(v).is_boundary() && (mesh.point(v) - p).norm() < radius)
                .map(|v| (1.0 + grads[v].norm_squared()).sqrt())
                .collect();
            if ws.is_empty() {
                return Err(SolverError::EmptyDisk(j));
            }
            let min_w = ws.iter().copied().fold(f64::INFINITY, f64::min);
            Ok(VertexGradient { vertex: j, min_w, nodes: ws.len(), passes: min_w > 10.0 })
        })
        .collect()
}
