//! Marked convex unitary polygonal domains.
//!
//! Edges carry alternating `±∞` marks: edge `(p_i, p_{i+1})` (0-based, indices
//! mod the vertex count) is `+∞` when `i` is even and `-∞` when `i` is odd.
//! Vertices are stored counterclockwise.

mod criteria;
mod unbounded;

pub use criteria::{
    chord_criterion, inner_radius, is_special_bounded, jenkins_serrin_bruteforce,
    jenkins_serrin_bruteforce_with_limit, short_chords,
    quadrilateral_compare, BruteForceVerdict, Chord, ChordVerdict, LengthOrdering,
    QuadrilateralComparison, SubpolygonWitness, DEFAULT_ENUMERATION_LIMIT,
};
pub use unbounded::{build_exhaustion_domain, classify_domain, AngleTail, DomainClass, UnboundedDomainSpec};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{cross, polygon_area2, P2};

pub const DEFAULT_TOL_GEOM: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("even vertex count required (got {0})")]
    OddVertexCount(usize),
    #[error("at least 4 vertices required (got {0})")]
    TooFewVertices(usize),
    #[error("edge {index} has length {length}, expected 1")]
    NonUnitEdge { index: usize, length: f64 },
    #[error("polygon is not convex at vertex {0}")]
    NonConvex(usize),
    #[error("polygon boundary is not simple (total turning {0} rad)")]
    NotSimple(f64),
    #[error("polygon is degenerate: {0}")]
    Degenerate(String),
    #[error("invalid convexity: turning angle {angle} at index {index}")]
    NegativeTurning { index: i64, angle: f64 },
    #[error("invalid convexity: total turning {0} exceeds pi")]
    TurningExceedsPi(f64),
    #[error("initial direction must be a unit vector (norm {0})")]
    NonUnitDirection(f64),
    #[error("invalid angle generator: {0}")]
    InvalidGenerator(String),
    #[error("domain class {0:?} is not admissible; only General domains can be solved")]
    NotGeneral(DomainClass),
    #[error("turning angle at the base vertex is zero; rebase with `with_admissible_base`")]
    FlatBase,
    #[error("exhaustion domain Ω_{n} fails the chord criterion: {chord:?}")]
    SpecialExhaustion { n: usize, chord: Chord },
    #[error("exhaustive enumeration over {vertices} vertices exceeds the limit of {limit}")]
    EnumerationTooLarge { vertices: usize, limit: usize },
    #[error("quadrilateral precondition violated: {0}")]
    QuadrilateralPrecondition(String),
}

/// Mark carried by a boundary edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mark {
    Plus,
    Minus,
}

impl Mark {
    /// Mark of edge `i` under the 0-based alternation.
    pub fn for_edge(i: usize) -> Mark {
        if i % 2 == 0 {
            Mark::Plus
        } else {
            Mark::Minus
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Mark::Plus => 1.0,
            Mark::Minus => -1.0,
        }
    }
}

/// Bounded convex polygon with unit edges and alternating edge marks.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkedPolygon {
    vertices: Vec<P2>,
    tol_geom: f64,
}

impl MarkedPolygon {
    /// Validates and builds a polygon. Flat vertices (interior angle `π`) are
    /// accepted.
    pub fn new(vertices: Vec<P2>, tol_geom: f64) -> Result<Self, DomainError> {
        let n = vertices.len();
        if n % 2 == 1 {
            return Err(DomainError::OddVertexCount(n));
        }
        if n < 4 {
            return Err(DomainError::TooFewVertices(n));
        }
        if !(tol_geom >= 0.0) {
            return Err(DomainError::Degenerate(format!("tol_geom = {tol_geom}")));
        }
        for i in 0..n {
            let length = (vertices[(i + 1) % n] - vertices[i]).norm();
            if (length - 1.0).abs() > tol_geom {
                return Err(DomainError::NonUnitEdge { index: i, length });
            }
        }
        if polygon_area2(&vertices) <= 0.0 {
            return Err(DomainError::Degenerate(
                "vertices must be listed counterclockwise with positive area".into(),
            ));
        }
        let mut turning = 0.0;
        for i in 0..n {
            let e0 = vertices[i] - vertices[(i + n - 1) % n];
            let e1 = vertices[(i + 1) % n] - vertices[i];
            let c = cross(e0, e1);
            let d = e0.dot(&e1);
            // c ≈ 0 with d < 0 is a spike (interior angle 0)
            if c < -tol_geom || (c.abs() <= tol_geom && d < 0.0) {
                return Err(DomainError::NonConvex(i));
            }
            turning += c.atan2(d);
        }
        if (turning - std::f64::consts::TAU).abs() > 1e-6 {
            return Err(DomainError::NotSimple(turning));
        }
        Ok(Self { vertices, tol_geom })
    }

    pub fn with_default_tol(vertices: Vec<P2>) -> Result<Self, DomainError> {
        Self::new(vertices, DEFAULT_TOL_GEOM)
    }

    pub fn unit_square() -> Self {
        Self::with_default_tol(vec![
            P2::new(0.0, 0.0),
            P2::new(1.0, 0.0),
            P2::new(1.0, 1.0),
            P2::new(0.0, 1.0),
        ])
        .expect("unit square is valid")
    }

    pub fn vertices(&self) -> &[P2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Half the vertex count.
    pub fn k(&self) -> usize {
        self.vertices.len() / 2
    }

    pub fn tol_geom(&self) -> f64 {
        self.tol_geom
    }

    /// Vertex with cyclic indexing.
    pub fn vertex(&self, i: usize) -> P2 {
        self.vertices[i % self.vertices.len()]
    }

    /// Endpoints of edge `i`.
    pub fn edge(&self, i: usize) -> (P2, P2) {
        (self.vertex(i), self.vertex(i + 1))
    }

    pub fn mark(&self, i: usize) -> Mark {
        Mark::for_edge(i % self.vertices.len())
    }

    /// Interior angle at vertex `i`, in `(0, π]`.
    pub fn interior_angle(&self, i: usize) -> f64 {
        let n = self.len();
        let e0 = self.vertex(i) - self.vertex(i + n - 1);
        let e1 = self.vertex(i + 1) - self.vertex(i);
        std::f64::consts::PI - cross(e0, e1).atan2(e0.dot(&e1))
    }

    /// Vertex `i` is flat when its turning is below `tol_geom`.
    pub fn is_flat(&self, i: usize) -> bool {
        let n = self.len();
        let e0 = self.vertex(i) - self.vertex(i + n - 1);
        let e1 = self.vertex(i + 1) - self.vertex(i);
        cross(e0, e1) <= self.tol_geom
    }

    pub fn is_strictly_convex(&self) -> bool {
        (0..self.len()).all(|i| !self.is_flat(i))
    }

    pub fn centroid(&self) -> P2 {
        let n = self.len() as f64;
        let s = self.vertices.iter().fold(nalgebra::Vector2::zeros(), |acc, p| acc + p.coords);
        P2::from(s / n)
    }

    /// Distance from `p` to the boundary.
    pub fn boundary_distance(&self, p: P2) -> f64 {
        (0..self.len())
            .map(|i| {
                let (a, b) = self.edge(i);
                crate::geometry::dist_point_segment(p, a, b)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Closed containment test with tolerance `tol` (positive values admit
    /// points slightly outside).
    pub fn contains(&self, p: P2, tol: f64) -> bool {
        (0..self.len()).all(|i| {
            let (a, b) = self.edge(i);
            cross(b - a, p - a) >= -tol
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn special_hexagon() -> MarkedPolygon {
        MarkedPolygon::with_default_tol(vec![
            P2::new(0.0, 0.0),
            P2::new(1.0, 0.0),
            P2::new(2.0, 0.0),
            P2::new(2.0, 1.0),
            P2::new(1.0, 1.0),
            P2::new(0.0, 1.0),
        ])
        .unwrap()
    }

    #[test]
    fn odd_vertex_count_rejected() {
        let pts: Vec<P2> = (0..5)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / 5.0;
                let r = 0.5 / (std::f64::consts::PI / 5.0).sin();
                P2::new(r * a.cos(), r * a.sin())
            })
            .collect();
        let err = MarkedPolygon::with_default_tol(pts).unwrap_err();
        assert_eq!(err, DomainError::OddVertexCount(5));
        assert!(err.to_string().contains("even vertex count required"));
    }

    #[test]
    fn non_unit_edge_rejected() {
        let err = MarkedPolygon::with_default_tol(vec![
            P2::new(0.0, 0.0),
            P2::new(2.0, 0.0),
            P2::new(2.0, 1.0),
            P2::new(0.0, 1.0),
        ])
        .unwrap_err();
        assert!(matches!(err, DomainError::NonUnitEdge { index: 0, .. }));
    }

    #[test]
    fn clockwise_rejected() {
        let err = MarkedPolygon::with_default_tol(vec![
            P2::new(0.0, 0.0),
            P2::new(0.0, 1.0),
            P2::new(1.0, 1.0),
            P2::new(1.0, 0.0),
        ])
        .unwrap_err();
        assert!(matches!(err, DomainError::Degenerate(_)));
    }

    #[test]
    fn non_convex_rejected() {
        // unit edges, reflex vertex at index 2
        let s = 0.5f64.sqrt();
        let pts = vec![
            P2::new(0.0, 0.0),
            P2::new(1.0, 0.0),
            P2::new(1.0 + s, s),
            P2::new(1.0, 2.0 * s),
            P2::new(1.0, 2.0 * s + 1.0),
            P2::new(0.0, 2.0 * s + 1.0),
        ];
        // this is a valid hexagon with unit edges except the closing edge
        let r = MarkedPolygon::with_default_tol(pts);
        assert!(r.is_err());
        let e = r.unwrap_err();
        assert!(matches!(e, DomainError::NonConvex(_) | DomainError::NonUnitEdge { .. }));
    }

    #[test]
    fn flat_vertices_allowed() {
        let hex = special_hexagon();
        assert!(hex.is_flat(1) && hex.is_flat(4));
        assert!(!hex.is_strictly_convex());
        assert!((hex.interior_angle(1) - std::f64::consts::PI).abs() < 1e-15);
        assert!((hex.interior_angle(0) - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn marks_alternate() {
        let sq = MarkedPolygon::unit_square();
        assert_eq!(sq.mark(0), Mark::Plus);
        assert_eq!(sq.mark(1), Mark::Minus);
        assert_eq!(sq.mark(2), Mark::Plus);
        assert_eq!(sq.mark(3), Mark::Minus);
    }
}
