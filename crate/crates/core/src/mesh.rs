//! Triangulation of marked polygons.
//!
//! Boundary points are graded toward polygon vertices (spacing `h/4` at a
//! vertex growing linearly to `h` at distance `r₀/2`), then a constrained
//! Delaunay refinement fills the interior.

use std::collections::HashMap;

use spade::{AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation};
use thiserror::Error;

use crate::domain::{inner_radius, DomainError, Mark, MarkedPolygon};
use crate::geometry::{barycentric, dist_point_segment, orient, P2};

/// Minimum angle the mesher guarantees, in degrees.
pub const MIN_ANGLE_DEG: f64 = 20.0;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("mesh size h = {0} outside (0, 1/2]")]
    BadSize(f64),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("triangulation failed: {0}")]
    Triangulation(String),
    #[error("refinement did not complete within {0} added vertices")]
    RefinementIncomplete(usize),
    #[error("extra point ({0}, {1}) is not strictly inside the polygon")]
    PointOutside(f64, f64),
    #[error("triangle {0} is degenerate or clockwise")]
    Degenerate(usize),
    #[error("boundary edge ({0}, {1}) does not lie on a polygon edge")]
    StrayBoundaryEdge(usize, usize),
    #[error("mesh is not connected")]
    Disconnected,
}

/// Where a mesh node sits relative to the polygon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Interior,
    /// Interior of polygon edge `i`.
    Edge(usize),
    /// Polygon vertex `j`.
    Vertex(usize),
}

impl NodeKind {
    pub fn is_boundary(self) -> bool {
        !matches!(self, NodeKind::Interior)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    /// Mesh nodes, in boundary (counterclockwise) order.
    pub nodes: [usize; 2],
    pub polygon_edge: usize,
    pub mark: Mark,
}

/// Conforming triangle mesh of a marked polygon.
#[derive(Debug, Clone)]
pub struct TriMesh {
    polygon: MarkedPolygon,
    points: Vec<P2>,
    triangles: Vec<[usize; 3]>,
    kinds: Vec<NodeKind>,
    boundary_edges: Vec<BoundaryEdge>,
    /// Unique undirected edges, `a < b`.
    edges: Vec<[usize; 2]>,
    /// Triangles on each side of an edge; `usize::MAX` marks the boundary.
    edge_triangles: Vec<[usize; 2]>,
    triangle_edges: Vec<[usize; 3]>,
    vertex_nodes: Vec<usize>,
    h: f64,
}

impl TriMesh {
    /// Builds the mesh structures from raw triangles. Triangles may be given
    /// in either orientation; they are stored counterclockwise.
    pub fn from_parts(
        polygon: MarkedPolygon,
        points: Vec<P2>,
        mut triangles: Vec<[usize; 3]>,
        h: f64,
    ) -> Result<Self, MeshError> {
        let tol = boundary_tol(&polygon);
        for (t, tri) in triangles.iter_mut().enumerate() {
            let a = orient(points[tri[0]], points[tri[1]], points[tri[2]]);
            if a < 0.0 {
                tri.swap(1, 2);
            } else if a == 0.0 {
                return Err(MeshError::Degenerate(t));
            }
        }
        let n = polygon.len();
        let kinds: Vec<NodeKind> = points
            .iter()
            .map(|&p| {
                if let Some(j) = (0..n).find(|&j| (polygon.vertex(j) - p).norm() <= tol) {
                    return NodeKind::Vertex(j);
                }
                let (i, d) = (0..n)
                    .map(|i| {
                        let (a, b) = polygon.edge(i);
                        (i, dist_point_segment(p, a, b))
                    })
                    .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
                if d <= tol {
                    NodeKind::Edge(i)
                } else {
                    NodeKind::Interior
                }
            })
            .collect();
        let mut vertex_nodes = vec![usize::MAX; n];
        for (v, k) in kinds.iter().enumerate() {
            if let NodeKind::Vertex(j) = *k {
                vertex_nodes[j] = v;
            }
        }
        if let Some(j) = vertex_nodes.iter().position(|&v| v == usize::MAX) {
            return Err(MeshError::Triangulation(format!("polygon vertex {j} missing from mesh")));
        }

        let mut map: HashMap<[usize; 2], usize> = HashMap::with_capacity(triangles.len() * 2);
        let mut edges = Vec::new();
        let mut edge_triangles: Vec<[usize; 2]> = Vec::new();
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut te = [0usize; 3];
            for k in 0..3 {
                // edge opposite vertex k
                let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                let key = [a.min(b), a.max(b)];
                let e = *map.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edge_triangles.push([usize::MAX; 2]);
                    edges.len() - 1
                });
                let slot = &mut edge_triangles[e];
                if slot[0] == usize::MAX {
                    slot[0] = t;
                } else if slot[1] == usize::MAX {
                    slot[1] = t;
                } else {
                    return Err(MeshError::Triangulation(format!("edge {key:?} shared by 3 triangles")));
                }
                te[k] = e;
            }
            triangle_edges.push(te);
        }

        let mut boundary_edges = Vec::new();
        for (e, &[a, b]) in edges.iter().enumerate() {
            let [t0, t1] = edge_triangles[e];
            if t1 != usize::MAX {
                continue;
            }
            // orient along the boundary: a→b counterclockwise means the
            // triangle lies to the left
            let tri = triangles[t0];
            let pos = |v: usize| tri.iter().position(|&x| x == v).unwrap();
            let (s, d) = if (pos(a) + 1) % 3 == pos(b) { (a, b) } else { (b, a) };
            let mid = P2::from((points[s].coords + points[d].coords) * 0.5);
            let pe = (0..n)
                .find(|&i| {
                    let (p, q) = polygon.edge(i);
                    dist_point_segment(points[s], p, q) <= tol
                        && dist_point_segment(points[d], p, q) <= tol
                        && dist_point_segment(mid, p, q) <= tol
                })
                .ok_or(MeshError::StrayBoundaryEdge(s, d))?;
            boundary_edges.push(BoundaryEdge { nodes: [s, d], polygon_edge: pe, mark: polygon.mark(pe) });
        }
        boundary_edges.sort_by_key(|b| (b.polygon_edge, b.nodes));

        let mesh = Self {
            polygon,
            points,
            triangles,
            kinds,
            boundary_edges,
            edges,
            edge_triangles,
            triangle_edges,
            vertex_nodes,
            h,
        };
        if !mesh.is_connected() {
            return Err(MeshError::Disconnected);
        }
        Ok(mesh)
    }

    pub fn polygon(&self) -> &MarkedPolygon {
        &self.polygon
    }

    pub fn points(&self) -> &[P2] {
        &self.points
    }

    pub fn point(&self, v: usize) -> P2 {
        self.points[v]
    }

    pub fn num_nodes(&self) -> usize {
        self.points.len()
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn kinds(&self) -> &[NodeKind] {
        &self.kinds
    }

    pub fn kind(&self, v: usize) -> NodeKind {
        self.kinds[v]
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn edge_triangles(&self, e: usize) -> [usize; 2] {
        self.edge_triangles[e]
    }

    /// Edges of triangle `t`, the k-th opposite the k-th vertex.
    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.triangle_edges[t]
    }

    /// Mesh node at polygon vertex `j`.
    pub fn vertex_node(&self, j: usize) -> usize {
        self.vertex_nodes[j % self.vertex_nodes.len()]
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn corners(&self, t: usize) -> [P2; 3] {
        self.triangles[t].map(|v| self.points[v])
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        0.5 * orient(a, b, c)
    }

    /// Gradients of the three barycentric hat functions on triangle `t`.
    pub fn hat_gradients(&self, t: usize) -> [nalgebra::Vector2<f64>; 3] {
        let [a, b, c] = self.corners(t);
        let d = orient(a, b, c);
        let g = |p: P2, q: P2| nalgebra::Vector2::new(p.y - q.y, q.x - p.x) / d;
        [g(b, c), g(c, a), g(a, b)]
    }

    pub fn min_angle_deg(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let c = self.corners(t);
                (0..3)
                    .map(|k| {
                        let u = c[(k + 1) % 3] - c[k];
                        let v = c[(k + 2) % 3] - c[k];
                        crate::geometry::cross(u, v).abs().atan2(u.dot(&v)).to_degrees()
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Node adjacency lists, sorted.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.points.len()];
        for &[a, b] in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        for l in &mut adj {
            l.sort_unstable();
        }
        adj
    }

    fn is_connected(&self) -> bool {
        let used: Vec<bool> = {
            let mut u = vec![false; self.points.len()];
            for t in &self.triangles {
                for &v in t {
                    u[v] = true;
                }
            }
            u
        };
        if used.iter().any(|&u| !u) {
            return false;
        }
        let adj = self.neighbors();
        let mut seen = vec![false; self.points.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Distance from each node to the polygon boundary.
    pub fn boundary_distances(&self) -> Vec<f64> {
        self.points.iter().map(|&p| self.polygon.boundary_distance(p)).collect()
    }

    /// Nearest node to `p`.
    pub fn nearest_node(&self, p: P2) -> usize {
        (0..self.points.len())
            .min_by(|&a, &b| {
                (self.points[a] - p).norm_squared().total_cmp(&(self.points[b] - p).norm_squared())
            })
            .unwrap()
    }

    pub fn locator(&self) -> Locator<'_> {
        Locator::new(self)
    }
}

fn boundary_tol(poly: &MarkedPolygon) -> f64 {
    poly.tol_geom().max(1e-10) * 10.0
}

/// Triangulates `poly` with target size `h`.
pub fn triangulate(poly: &MarkedPolygon, h: f64) -> Result<TriMesh, MeshError> {
    triangulate_with_points(poly, h, &[])
}

/// Like [`triangulate`], with extra interior points forced to be mesh nodes.
pub fn triangulate_with_points(poly: &MarkedPolygon, h: f64, extra: &[P2]) -> Result<TriMesh, MeshError> {
    if !(h > 0.0 && h <= 0.5) {
        return Err(MeshError::BadSize(h));
    }
    let r0 = inner_radius(poly)?;
    let mut boundary: Vec<Point2<f64>> = Vec::new();
    for i in 0..poly.len() {
        let (a, b) = poly.edge(i);
        let ts = graded_params(h, r0);
        for &t in &ts[..ts.len() - 1] {
            let p = if t == 0.0 { a } else { a + (b - a) * t };
            boundary.push(Point2::new(p.x, p.y));
        }
    }

    let mut cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::new();
    cdt.add_constraint_edges(boundary, true)
        .map_err(|e| MeshError::Triangulation(format!("{e:?}")))?;
    for &q in extra {
        if !poly.contains(q, 0.0) || poly.boundary_distance(q) <= 0.0 {
            return Err(MeshError::PointOutside(q.x, q.y));
        }
        cdt.insert(Point2::new(q.x, q.y))
            .map_err(|e| MeshError::Triangulation(format!("{e:?}")))?;
    }

    let area = 0.5 * crate::geometry::polygon_area2(poly.vertices());
    let max_area = 3f64.sqrt() / 4.0 * h * h;
    let cap = (40.0 * area / max_area) as usize + 20_000;
    let params = RefinementParameters::<f64>::new()
        .with_angle_limit(AngleLimit::from_deg(25.0))
        .with_max_allowed_area(max_area)
        .exclude_outer_faces(true)
        .with_max_additional_vertices(cap);
    let result = cdt.refine(params);
    if !result.refinement_complete {
        return Err(MeshError::RefinementIncomplete(cap));
    }

    let mut index = HashMap::new();
    let mut points = Vec::new();
    let mut triangles = Vec::new();
    for face in cdt.inner_faces() {
        if result.excluded_faces.contains(&face.fix()) {
            continue;
        }
        let vs = face.vertices();
        let mut tri = [0usize; 3];
        for (k, v) in vs.iter().enumerate() {
            let key = v.fix();
            tri[k] = *index.entry(key).or_insert_with(|| {
                let p = v.position();
                points.push(P2::new(p.x, p.y));
                points.len() - 1
            });
        }
        triangles.push(tri);
    }
    // deterministic node order: boundary walk order is not needed, sort by
    // coordinates so meshes are reproducible independent of hash iteration
    let order: Vec<usize> = {
        let mut o: Vec<usize> = (0..points.len()).collect();
        o.sort_by(|&a, &b| points[a].y.total_cmp(&points[b].y).then(points[a].x.total_cmp(&points[b].x)));
        o
    };
    let mut rank = vec![0usize; points.len()];
    for (r, &v) in order.iter().enumerate() {
        rank[v] = r;
    }
    let points: Vec<P2> = order.iter().map(|&v| points[v]).collect();
    let mut triangles: Vec<[usize; 3]> = triangles.into_iter().map(|t| t.map(|v| rank[v])).collect();
    for t in &mut triangles {
        let m = (0..3).min_by_key(|&k| t[k]).unwrap();
        t.rotate_left(m);
    }
    triangles.sort_unstable();

    TriMesh::from_parts(poly.clone(), points, triangles, h)
}

/// Parameters in `[0, 1]` along a unit edge with spacing
/// `h·(¼ + ¾·min(1, d/(r₀/2)))`, `d` the distance to the nearer endpoint.
pub(crate) fn graded_params(h: f64, r0: f64) -> Vec<f64> {
    let c = 0.5 * r0;
    let slope = 0.75 * h / c;
    let s0 = 0.25 * h;
    // F(d) = ∫₀^d ds/s(x)
    let fc = (4.0 * c / (3.0 * h)) * 4f64.ln();
    let f = |d: f64| {
        if d <= c {
            ((s0 + slope * d) / s0).ln() / slope
        } else {
            fc + (d - c) / h
        }
    };
    let finv = |y: f64| {
        if y <= fc {
            s0 * ((y * slope).exp() - 1.0) / slope
        } else {
            c + (y - fc) * h
        }
    };
    let half = f(0.5);
    let segments = ((2.0 * half).ceil() as usize).max(2);
    let step = 2.0 * half / segments as f64;
    (0..=segments)
        .map(|j| {
            let y = j as f64 * step;
            if j == 0 {
                0.0
            } else if j == segments {
                1.0
            } else if y <= half {
                finv(y)
            } else {
                1.0 - finv(2.0 * half - y)
            }
        })
        .collect()
}

/// Bucket grid over the triangles for point location.
pub struct Locator<'a> {
    mesh: &'a TriMesh,
    origin: P2,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl<'a> Locator<'a> {
    pub fn new(mesh: &'a TriMesh) -> Self {
        let (mut lo, mut hi) = (P2::new(f64::INFINITY, f64::INFINITY), P2::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
        for p in mesh.points() {
            lo = P2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = P2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let cell = (2.0 * mesh.h()).max(1e-6);
        let nx = (((hi.x - lo.x) / cell).ceil() as usize).max(1);
        let ny = (((hi.y - lo.y) / cell).ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        for t in 0..mesh.num_triangles() {
            let c = mesh.corners(t);
            let (x0, x1) = (c.iter().map(|p| p.x).fold(f64::INFINITY, f64::min), c.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max));
            let (y0, y1) = (c.iter().map(|p| p.y).fold(f64::INFINITY, f64::min), c.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max));
            let ix0 = (((x0 - lo.x) / cell).floor() as usize).min(nx - 1);
            let ix1 = (((x1 - lo.x) / cell).floor() as usize).min(nx - 1);
            let iy0 = (((y0 - lo.y) / cell).floor() as usize).min(ny - 1);
            let iy1 = (((y1 - lo.y) / cell).floor() as usize).min(ny - 1);
            for iy in iy0..=iy1 {
                for ix in ix0..=ix1 {
                    buckets[iy * nx + ix].push(t);
                }
            }
        }
        Self { mesh, origin: lo, cell, nx, ny, buckets }
    }

    /// Triangle containing `p` and its barycentric coordinates.
    pub fn locate(&self, p: P2) -> Option<(usize, [f64; 3])> {
        let fx = (p.x - self.origin.x) / self.cell;
        let fy = (p.y - self.origin.y) / self.cell;
        if !(fx >= -1e-9 && fy >= -1e-9) {
            return None;
        }
        let ix = (fx.max(0.0).floor() as usize).min(self.nx - 1);
        let iy = (fy.max(0.0).floor() as usize).min(self.ny - 1);
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &t in &self.buckets[iy * self.nx + ix] {
            let [a, b, c] = self.mesh.corners(t);
            let l = barycentric(p, a, b, c);
            let m = l[0].min(l[1]).min(l[2]);
            if best.is_none_or(|(_, _, bm)| m > bm) {
                best = Some((t, l, m));
            }
        }
        best.filter(|&(_, _, m)| m >= -1e-9).map(|(t, l, _)| (t, l))
    }

    /// Piecewise-linear interpolation of nodal values.
    pub fn interpolate(&self, values: &[f64], p: P2) -> Option<f64> {
        self.locate(p).map(|(t, l)| {
            let tri = self.mesh.triangles()[t];
            l[0] * values[tri[0]] + l[1] * values[tri[1]] + l[2] * values[tri[2]]
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_coarse() {
        let m = triangulate(&MarkedPolygon::unit_square(), 0.5).unwrap();
        assert!(m.num_triangles() >= 8);
        for j in 0..4 {
            assert_eq!(m.point(m.vertex_node(j)), MarkedPolygon::unit_square().vertex(j));
        }
        assert!(m.min_angle_deg() >= MIN_ANGLE_DEG);
    }

    #[test]
    fn graded_spacing() {
        let ts = graded_params(0.1, 0.5);
        assert_eq!(ts[0], 0.0);
        assert_eq!(*ts.last().unwrap(), 1.0);
        let first = ts[1] - ts[0];
        let mid = ts[ts.len() / 2 + 1] - ts[ts.len() / 2];
        assert!(first < 0.04 && mid > 0.08, "{first} {mid}");
        assert!(ts.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn bad_h() {
        assert!(matches!(triangulate(&MarkedPolygon::unit_square(), 0.7), Err(MeshError::BadSize(_))));
        assert!(matches!(triangulate(&MarkedPolygon::unit_square(), 0.0), Err(MeshError::BadSize(_))));
    }

    #[test]
    fn locate_and_interpolate() {
        let m = triangulate(&MarkedPolygon::unit_square(), 0.125).unwrap();
        let vals: Vec<f64> = m.points().iter().map(|p| 2.0 * p.x - p.y + 0.5).collect();
        let loc = m.locator();
        for &(x, y) in &[(0.3, 0.7), (0.0, 0.0), (1.0, 0.5), (0.999, 0.001)] {
            let v = loc.interpolate(&vals, P2::new(x, y)).unwrap();
            assert!((v - (2.0 * x - y + 0.5)).abs() < 1e-12);
        }
        assert!(loc.locate(P2::new(1.5, 0.5)).is_none());
    }

    #[test]
    fn boundary_table_covers_perimeter() {
        let m = triangulate(&MarkedPolygon::unit_square(), 0.25).unwrap();
        let mut per_edge = [0.0; 4];
        for b in m.boundary_edges() {
            per_edge[b.polygon_edge] += (m.point(b.nodes[1]) - m.point(b.nodes[0])).norm();
            assert_eq!(b.mark, Mark::for_edge(b.polygon_edge));
        }
        for l in per_edge {
            assert!((l - 1.0).abs() < 1e-12);
        }
    }
}
