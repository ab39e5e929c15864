//! Conjugate function and conjugate immersion of a discrete minimal graph.
//!
//! On each triangle the graph `X = (x₁, x₂, u)` has constant gradient, hence
//! constant induced metric `g = I + ∇u ∇uᵀ`. The conjugate differentials are
//! the metric Hodge stars `*dx₁`, `*dx₂`, `*du`; the last one is
//! `dψ = (u₁ dx₂ − u₂ dx₁)/W`. Each is integrated along one breadth-first
//! spanning tree of mesh edges, using on every edge the average of the
//! adjacent triangle forms, and shifted to the prescribed base value.

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{orient, P2, V2};
use crate::mesh::TriMesh;
use crate::solver::{least_squares_potential, GraphSolution};

#[derive(Debug, Error)]
pub enum ConjugationError {
    #[error("mesh is not connected")]
    Disconnected,
    #[error("polygon has no vertex {0}")]
    NoSuchVertex(usize),
    #[error("segment ({0}, {1}) - ({2}, {3}) is not a union of boundary mesh edges")]
    NotResolved(f64, f64, f64, f64),
    #[error("loop residual {residual:.3e} of the conjugate coordinate forms exceeds {bound:.3e}")]
    MetricInconsistency { residual: f64, bound: f64 },
    #[error("induced metric is singular on triangle {0}")]
    SingularMetric(usize),
    #[error("potential recovery failed: {0}")]
    Recovery(String),
    #[error("nodal vector has length {got}, mesh has {expected} nodes")]
    Length { got: usize, expected: usize },
}

/// How nodal coordinates of `X*` are recovered from the per-triangle forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Recovery {
    /// Integration along the spanning tree.
    Tree,
    /// P1 potential closest to the forms in the area-weighted L² sense.
    LeastSquares,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugateOptions {
    /// Loop residuals are compared with `c_loop · h²`.
    pub c_loop: f64,
    /// Triangles with all nodes at least this far from the boundary form the
    /// resolved core, where `*dx₁`, `*dx₂` and the Krust check are assessed.
    /// Near marked edges the conjugate stretches by `W` along one direction
    /// and shrinks by `1/W` across it, so its P1 image is not resolved there.
    pub margin: f64,
    pub recovery: Recovery,
}

impl Default for ConjugateOptions {
    fn default() -> Self {
        Self { c_loop: 10.0, margin: 0.1, recovery: Recovery::LeastSquares }
    }
}

fn core_triangles(mesh: &TriMesh, margin: f64) -> Vec<bool> {
    let d = mesh.boundary_distances();
    mesh.triangles().iter().map(|tri| tri.iter().all(|&v| d[v] >= margin)).collect()
}

/// Hodge star of the covector `alpha` for the graph metric
/// `g = I + ∇u∇uᵀ`: `*α = √det(g) · J g⁻¹ α` with `J(a, b) = (−b, a)`.
pub fn hodge_star(grad: V2, alpha: V2) -> Option<V2> {
    let det = 1.0 + grad.norm_squared();
    if !det.is_finite() {
        return None;
    }
    // g has eigenvalue W² along ∇u and 1 across it
    let norm = grad.norm();
    let raised = if norm == 0.0 {
        alpha
    } else {
        // unnormalized frame keeps α·J∇u exactly zero for α = ∇u
        let f = V2::new(-grad.y, grad.x);
        let n2 = norm * norm;
        grad * (alpha.dot(&grad) / (n2 * det)) + f * (alpha.dot(&f) / n2)
    };
    Some(V2::new(-raised.y, raised.x) * det.sqrt())
}

/// The form `dψ` on a triangle with gradient `g`: `(−u₂/W, u₁/W)`.
pub fn conjugate_form(grad: V2) -> V2 {
    let w = (1.0 + grad.norm_squared()).sqrt();
    V2::new(-grad.y, grad.x) / w
}

/// Largest relative deviation between `*du` and `dψ` over all triangles.
pub fn rotation_consistency(sol: &GraphSolution) -> Result<f64, ConjugationError> {
    let mut worst: f64 = 0.0;
    for (t, &g) in sol.gradients().iter().enumerate() {
        let star = hodge_star(g, g).ok_or(ConjugationError::SingularMetric(t))?;
        let form = conjugate_form(g);
        let scale = form.norm().max(f64::MIN_POSITIVE);
        if form.norm() == 0.0 {
            worst = worst.max(star.norm());
        } else {
            worst = worst.max((star - form).norm() / scale);
        }
    }
    Ok(worst)
}

/// Breadth-first spanning tree over mesh edges, rooted at the node farthest
/// from the boundary so that tree paths avoid the boundary layer.
struct Tree {
    order: Vec<usize>,
    parent: Vec<usize>,
}

fn spanning_tree(mesh: &TriMesh) -> Result<Tree, ConjugationError> {
    let dist = mesh.boundary_distances();
    let root = (0..mesh.num_nodes()).fold(0, |r, v| if dist[v] > dist[r] { v } else { r });
    let nbrs = mesh.neighbors();
    let mut parent = vec![usize::MAX; mesh.num_nodes()];
    let mut order = Vec::with_capacity(mesh.num_nodes());
    parent[root] = root;
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        order.push(v);
        for &w in &nbrs[v] {
            if parent[w] == usize::MAX {
                parent[w] = v;
                queue.push_back(w);
            }
        }
    }
    if order.len() != mesh.num_nodes() {
        return Err(ConjugationError::Disconnected);
    }
    Ok(Tree { order, parent })
}

/// A per-triangle constant 1-form, evaluated on edges by averaging.
struct EdgeForm<'a> {
    mesh: &'a TriMesh,
    values: Vec<V2>,
}

impl EdgeForm<'_> {
    /// Integral along the directed edge `a → b`.
    fn integral(&self, e: usize, a: usize, b: usize) -> f64 {
        let [t0, t1] = self.mesh.edge_triangles(e);
        let avg = if t1 == usize::MAX { self.values[t0] } else { (self.values[t0] + self.values[t1]) * 0.5 };
        avg.dot(&(self.mesh.point(b) - self.mesh.point(a)))
    }

    /// Potential with value `base_value` at node `base`.
    fn integrate(&self, tree: &Tree, edge_of: &HashMap<[usize; 2], usize>, base: usize, base_value: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.mesh.num_nodes()];
        for &v in &tree.order {
            let p = tree.parent[v];
            if p != v {
                out[v] = out[p] + self.integral(edge_of[&[p.min(v), p.max(v)]], p, v);
            }
        }
        let shift = base_value - out[base];
        for x in &mut out {
            *x += shift;
        }
        out
    }

    /// Largest circulation around a triangle.
    fn max_face_residual(&self) -> f64 {
        self.max_face_residual_on(|_| true)
    }

    fn max_face_residual_on(&self, keep: impl Fn(usize) -> bool) -> f64 {
        let mesh = self.mesh;
        (0..mesh.num_triangles())
            .filter(|&t| keep(t))
            .map(|t| {
                let tri = mesh.triangles()[t];
                let edges = mesh.triangle_edges(t);
                (0..3)
                    .map(|k| self.integral(edges[k], tri[(k + 1) % 3], tri[(k + 2) % 3]))
                    .sum::<f64>()
                    .abs()
            })
            .fold(0.0, f64::max)
    }
}

fn edge_index(mesh: &TriMesh) -> HashMap<[usize; 2], usize> {
    mesh.edges().iter().enumerate().map(|(e, &k)| (k, e)).collect()
}

/// Nodal conjugate function with its integration data.
#[derive(Debug, Clone, Serialize)]
pub struct ConjugateFunction {
    pub values: Vec<f64>,
    /// Mesh node where the integration starts.
    pub base: usize,
    pub base_value: f64,
    /// Largest `|∮ dψ|` over triangle loops.
    pub max_loop_residual: f64,
}

impl ConjugateFunction {
    pub fn value(&self, v: usize) -> f64 {
        self.values[v]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Integrates `dψ` from polygon vertex `base_vertex`, where `ψ = base_value`.
pub fn conjugate_function(
    sol: &GraphSolution,
    base_vertex: usize,
    base_value: f64,
) -> Result<ConjugateFunction, ConjugationError> {
    let mesh = sol.mesh();
    if base_vertex >= mesh.polygon().len() {
        return Err(ConjugationError::NoSuchVertex(base_vertex));
    }
    let base = mesh.vertex_node(base_vertex);
    let tree = spanning_tree(mesh)?;
    let form = EdgeForm { mesh, values: sol.gradients().iter().map(|&g| conjugate_form(g)).collect() };
    let values = form.integrate(&tree, &edge_index(mesh), base, base_value);
    Ok(ConjugateFunction { values, base, base_value, max_loop_residual: form.max_face_residual() })
}

/// `ψ(b) − ψ(a)` for a boundary segment from `a` to `b` in the boundary
/// orientation. Both ends must be mesh nodes on one polygon edge.
pub fn edge_flux(sol: &GraphSolution, psi: &ConjugateFunction, a: P2, b: P2) -> Result<f64, ConjugationError> {
    let mesh = sol.mesh();
    if psi.values.len() != mesh.num_nodes() {
        return Err(ConjugationError::Length { got: psi.values.len(), expected: mesh.num_nodes() });
    }
    let poly = mesh.polygon();
    let unresolved = || ConjugationError::NotResolved(a.x, a.y, b.x, b.y);
    let tol = poly.tol_geom().max(1e-12) * 10.0;
    let (na, nb) = (mesh.nearest_node(a), mesh.nearest_node(b));
    if (mesh.point(na) - a).norm() > tol || (mesh.point(nb) - b).norm() > tol || na == nb {
        return Err(unresolved());
    }
    let on_edge = (0..poly.len()).find(|&i| {
        let (p, q) = poly.edge(i);
        let d = q - p;
        crate::geometry::dist_point_segment(a, p, q) <= tol
            && crate::geometry::dist_point_segment(b, p, q) <= tol
            && (b - a).dot(&d) > 0.0
    });
    on_edge.ok_or_else(unresolved)?;
    Ok(psi.values[nb] - psi.values[na])
}

/// Flux `ψ(p_{i+1}) − ψ(p_i)` over polygon edge `i`.
pub fn polygon_edge_flux(sol: &GraphSolution, psi: &ConjugateFunction, i: usize) -> Result<f64, ConjugationError> {
    let (a, b) = sol.mesh().polygon().edge(i);
    edge_flux(sol, psi, a, b)
}

/// Conjugate immersion `X*` over the mesh of a graph solution.
#[derive(Debug, Clone)]
pub struct ConjugateSolution {
    mesh: Arc<TriMesh>,
    psi: ConjugateFunction,
    positions: Vec<[f64; 3]>,
    /// Largest triangle-loop residuals of `*dx₁` and `*dx₂`.
    star_residuals: [f64; 2],
    /// The same over the resolved core.
    core_residuals: [f64; 2],
    core: Vec<bool>,
    truncation: Option<f64>,
}

impl ConjugateSolution {
    /// Truncation level `M` of the underlying graph solution.
    pub fn truncation(&self) -> Option<f64> {
        self.truncation
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<TriMesh> {
        &self.mesh
    }

    pub fn psi(&self) -> &ConjugateFunction {
        &self.psi
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    pub fn position(&self, v: usize) -> [f64; 3] {
        self.positions[v]
    }

    pub fn star_residuals(&self) -> [f64; 2] {
        self.star_residuals
    }

    pub fn core_residuals(&self) -> [f64; 2] {
        self.core_residuals
    }

    /// Whether triangle `t` lies in the resolved core.
    pub fn in_core(&self, t: usize) -> bool {
        self.core[t]
    }

    /// Krust check over the resolved core, with the flipped count over the
    /// whole piece for information.
    pub fn krust(&self) -> KrustReport {
        let tris: Vec<[usize; 3]> =
            (0..self.mesh.num_triangles()).filter(|&t| self.core[t]).map(|t| self.mesh.triangles()[t]).collect();
        let mut report = krust_check(&self.positions, &tris);
        report.flipped_outside_core = krust_check(&self.positions, self.mesh.triangles()).flipped - report.flipped;
        report
    }

    /// Largest loop residual over `dψ`, `*dx₁`, `*dx₂`.
    pub fn max_loop_residual(&self) -> f64 {
        self.psi.max_loop_residual.max(self.star_residuals[0]).max(self.star_residuals[1])
    }
}

/// Integrates `*dx₁`, `*dx₂` over the tree rooted at the base of `psi` and
/// sets `X*₃ = ψ`.
pub fn conjugate_immersion(
    sol: &GraphSolution,
    psi: &ConjugateFunction,
    opts: &ConjugateOptions,
) -> Result<ConjugateSolution, ConjugationError> {
    let mesh = sol.mesh();
    if psi.values.len() != mesh.num_nodes() {
        return Err(ConjugationError::Length { got: psi.values.len(), expected: mesh.num_nodes() });
    }
    let tree = spanning_tree(mesh)?;
    let edges = edge_index(mesh);
    let mut coords = Vec::with_capacity(2);
    let mut star_residuals = [0.0; 2];
    let mut core_residuals = [0.0; 2];
    let core = core_triangles(mesh, opts.margin);
    for (k, axis) in [V2::new(1.0, 0.0), V2::new(0.0, 1.0)].into_iter().enumerate() {
        let values = sol
            .gradients()
            .iter()
            .enumerate()
            .map(|(t, &g)| hodge_star(g, axis).ok_or(ConjugationError::SingularMetric(t)))
            .collect::<Result<Vec<_>, _>>()?;
        let form = EdgeForm { mesh, values };
        star_residuals[k] = form.max_face_residual();
        core_residuals[k] = form.max_face_residual_on(|t| core[t]);
        coords.push(match opts.recovery {
            Recovery::Tree => form.integrate(&tree, &edges, psi.base, 0.0),
            Recovery::LeastSquares => least_squares_potential(mesh, &form.values, psi.base, 0.0)
                .map_err(|e| ConjugationError::Recovery(e.to_string()))?,
        });
    }
    let bound = opts.c_loop * mesh.h() * mesh.h();
    let residual = core_residuals[0].max(core_residuals[1]);
    if residual > bound {
        return Err(ConjugationError::MetricInconsistency { residual, bound });
    }
    let positions = (0..mesh.num_nodes()).map(|v| [coords[0][v], coords[1][v], psi.values[v]]).collect();
    Ok(ConjugateSolution {
        mesh: sol.mesh_arc().clone(),
        psi: psi.clone(),
        positions,
        star_residuals,
        core_residuals,
        core,
        truncation: sol.truncation(),
    })
}

/// `ψ` from `p₀` with value 0, then `X*`.
pub fn conjugate(sol: &GraphSolution, opts: &ConjugateOptions) -> Result<ConjugateSolution, ConjugationError> {
    let psi = conjugate_function(sol, 0, 0.0)?;
    conjugate_immersion(sol, &psi, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KrustReport {
    pub passes: bool,
    /// Sign of the projected orientation of the majority of triangles.
    pub orientation: i8,
    /// Triangles whose projected orientation disagrees with the majority.
    pub flipped: usize,
    /// Projected triangles with (near) zero area.
    pub degenerate: Vec<usize>,
    /// Sample points covered by more than one projected triangle.
    pub overlaps: usize,
    pub samples: usize,
    /// Flipped triangles outside the checked set, when it is a subset.
    pub flipped_outside_core: usize,
}

/// Checks that the horizontal projection of an immersed triangle mesh is
/// injective: one orientation sign and no overlap at sampled points.
pub fn krust_check(positions: &[[f64; 3]], triangles: &[[usize; 3]]) -> KrustReport {
    let proj = |v: usize| P2::new(positions[v][0], positions[v][1]);
    let corners: Vec<[P2; 3]> = triangles.iter().map(|t| t.map(proj)).collect();
    let areas: Vec<f64> = corners.iter().map(|c| orient(c[0], c[1], c[2])).collect();
    let scale = corners
        .iter()
        .flat_map(|c| [(c[1] - c[0]).norm_squared(), (c[2] - c[1]).norm_squared(), (c[0] - c[2]).norm_squared()])
        .fold(0.0, f64::max);
    let tiny = 1e-14 * scale.max(f64::MIN_POSITIVE);
    let degenerate: Vec<usize> = (0..areas.len()).filter(|&t| areas[t].abs() <= tiny).collect();
    let pos = areas.iter().filter(|&&a| a > tiny).count();
    let neg = areas.iter().filter(|&&a| a < -tiny).count();
    let orientation: i8 = if pos >= neg { 1 } else { -1 };
    let flipped = pos.min(neg);

    let grid = BucketGrid::new(&corners);
    let mut overlaps = 0;
    let mut samples = 0;
    for (t, c) in corners.iter().enumerate() {
        if degenerate.contains(&t) {
            continue;
        }
        for bary in SAMPLE_POINTS {
            let p = P2::from(c[0].coords * bary[0] + c[1].coords * bary[1] + c[2].coords * bary[2]);
            samples += 1;
            if grid.candidates(p).any(|s| s != t && strictly_inside(&corners[s], p)) {
                overlaps += 1;
            }
        }
    }
    KrustReport {
        passes: flipped == 0 && degenerate.is_empty() && overlaps == 0,
        orientation,
        flipped,
        degenerate,
        overlaps,
        samples,
        flipped_outside_core: 0,
    }
}

/// Centroid and points halfway between the centroid and each corner.
const SAMPLE_POINTS: [[f64; 3]; 4] = [
    [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
    [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
    [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
    [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
];

fn strictly_inside(c: &[P2; 3], p: P2) -> bool {
    let s = orient(c[0], c[1], c[2]).signum();
    let margin = 1e-12 * orient(c[0], c[1], c[2]).abs();
    (0..3).all(|k| s * orient(c[k], c[(k + 1) % 3], p) > margin)
}

/// Uniform buckets over triangle bounding boxes.
struct BucketGrid {
    origin: P2,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl BucketGrid {
    fn new(corners: &[[P2; 3]]) -> Self {
        let (mut lo, mut hi) = (V2::repeat(f64::INFINITY), V2::repeat(f64::NEG_INFINITY));
        for c in corners {
            for p in c {
                lo = lo.inf(&p.coords);
                hi = hi.sup(&p.coords);
            }
        }
        let n = corners.len().max(1) as f64;
        let ext = (hi - lo).sup(&V2::repeat(f64::MIN_POSITIVE));
        let cell = ((ext.x * ext.y / n).sqrt() * 2.0).max(ext.x.max(ext.y) / 4096.0);
        let nx = ((ext.x / cell).ceil() as usize).max(1);
        let ny = ((ext.y / cell).ceil() as usize).max(1);
        let mut grid = Self { origin: P2::from(lo), cell, nx, ny, buckets: vec![Vec::new(); nx * ny] };
        for (t, c) in corners.iter().enumerate() {
            let (mut a, mut b) = (V2::repeat(f64::INFINITY), V2::repeat(f64::NEG_INFINITY));
            for p in c {
                a = a.inf(&p.coords);
                b = b.sup(&p.coords);
            }
            let (i0, j0) = grid.cell_of(P2::from(a));
            let (i1, j1) = grid.cell_of(P2::from(b));
            for j in j0..=j1 {
                for i in i0..=i1 {
                    grid.buckets[j * nx + i].push(t);
                }
            }
        }
        grid
    }

    fn cell_of(&self, p: P2) -> (usize, usize) {
        let f = |x: f64, n: usize| ((x / self.cell).floor().max(0.0) as usize).min(n - 1);
        (f(p.x - self.origin.x, self.nx), f(p.y - self.origin.y, self.ny))
    }

    fn candidates(&self, p: P2) -> impl Iterator<Item = usize> + '_ {
        let (i, j) = self.cell_of(p);
        self.buckets[j * self.nx + i].iter().copied()
    }
}
