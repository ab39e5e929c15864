//! Special-domain detection and the Jenkins–Serrin solvability criteria for
//! bounded marked polygons.

use serde::Serialize;

use super::{DomainError, Mark, MarkedPolygon};
use crate::geometry::{cross, dist_point_segment, P2};

/// Largest vertex count accepted by [`jenkins_serrin_bruteforce`].
pub const DEFAULT_ENUMERATION_LIMIT: usize = 24;

/// Segment joining two non-consecutive polygon vertices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Chord {
    pub i: usize,
    pub j: usize,
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChordVerdict {
    pub holds: bool,
    /// Shortest violating even–odd chord, when the criterion fails.
    pub witness: Option<Chord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubpolygonWitness {
    /// Vertex indices of the subpolygon in cyclic order.
    pub indices: Vec<usize>,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BruteForceVerdict {
    pub holds: bool,
    pub witness: Option<SubpolygonWitness>,
    /// Number of subpolygons with positive area that were checked.
    pub checked: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LengthOrdering {
    Less,
    Equal,
    Greater,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadrilateralComparison {
    /// `|CD|` compared with `|AB|`.
    pub ordering: LengthOrdering,
    pub is_parallelogram: bool,
    pub cd: f64,
    pub ab: f64,
}

/// True for the parallelograms with side lengths `1` and `k − 1` made of
/// `2k` collinear unit edges, `k ≥ 3`.
pub fn is_special_bounded(poly: &MarkedPolygon) -> bool {
    let n = poly.len();
    let k = poly.k();
    if k < 3 {
        return false;
    }
    let corners: Vec<usize> = (0..n).filter(|&i| !poly.is_flat(i)).collect();
    if corners.len() != 4 {
        return false;
    }
    let runs: Vec<usize> = (0..4)
        .map(|c| (corners[(c + 1) % 4] + n - corners[c]) % n)
        .collect();
    if runs[0] != runs[2] || runs[1] != runs[3] {
        return false;
    }
    let (short, long) = (runs[0].min(runs[1]), runs[0].max(runs[1]));
    if short != 1 || long != k - 1 {
        return false;
    }
    let [a, b, c, d] = [0, 1, 2, 3].map(|q| poly.vertex(corners[q]));
    ((a.coords + c.coords) - (b.coords + d.coords)).norm() <= 4.0 * poly.tol_geom().max(1e-12)
}

/// Checks that every chord from an even vertex to an odd vertex is longer
/// than 1. Chords within `tol_geom` of length 1 count as violations.
pub fn chord_criterion(poly: &MarkedPolygon) -> ChordVerdict {
    let witness = short_chords(poly).into_iter().fold(None, |w: Option<Chord>, c| match w {
        Some(w) if w.length <= c.length => Some(w),
        _ => Some(c),
    });
    ChordVerdict { holds: witness.is_none(), witness }
}

/// Every odd-span chord of length at most `1 + tol_geom`, in index order.
pub fn short_chords(poly: &MarkedPolygon) -> Vec<Chord> {
    let n = poly.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in (i + 3..n).step_by(2) {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (a, b) = (poly.vertex(i), poly.vertex(j));
            let length = (b - a).norm();
            if length <= 1.0 + poly.tol_geom() {
                out.push(Chord { i, j, a: [a.x, a.y], b: [b.x, b.y], length });
            }
        }
    }
    out
}

/// Exhaustive check of the Jenkins–Serrin inequalities `2α < γ`, `2β < γ`
/// over all strict subpolygons and `α = β` on the polygon itself.
///
/// A subpolygon side counts towards `α` or `β` only when it is a single edge
/// of the polygon; any other side is a chord. Subsets with zero area are
/// skipped. Subsets are visited in lexicographic order, so the witness is the
/// lexicographically smallest violating index list.
pub fn jenkins_serrin_bruteforce(poly: &MarkedPolygon) -> Result<BruteForceVerdict, DomainError> {
    jenkins_serrin_bruteforce_with_limit(poly, DEFAULT_ENUMERATION_LIMIT)
}

pub fn jenkins_serrin_bruteforce_with_limit(
    poly: &MarkedPolygon,
    limit: usize,
) -> Result<BruteForceVerdict, DomainError> {
    let n = poly.len();
    if n > limit {
        return Err(DomainError::EnumerationTooLarge { vertices: n, limit });
    }
    let tol = poly.tol_geom().max(1e-12);

    let full = measure(poly, &(0..n).collect::<Vec<_>>());
    if (full.0 - full.1).abs() > tol * n as f64 {
        return Ok(BruteForceVerdict {
            holds: false,
            witness: Some(SubpolygonWitness {
                indices: (0..n).collect(),
                alpha: full.0,
                beta: full.1,
                gamma: full.2,
            }),
            checked: 1,
        });
    }

    let mut stack = Vec::with_capacity(n);
    let mut checked = 0usize;
    let witness = visit(poly, tol, 0, &mut stack, &mut checked);
    Ok(BruteForceVerdict { holds: witness.is_none(), witness, checked: checked + 1 })
}

fn visit(
    poly: &MarkedPolygon,
    tol: f64,
    next: usize,
    stack: &mut Vec<usize>,
    checked: &mut usize,
) -> Option<SubpolygonWitness> {
    let n = poly.len();
    for v in next..n {
        stack.push(v);
        if stack.len() >= 3 && stack.len() < n && has_area(poly, stack) {
            *checked += 1;
            let (alpha, beta, gamma) = measure(poly, stack);
            if 2.0 * alpha >= gamma - tol || 2.0 * beta >= gamma - tol {
                return Some(SubpolygonWitness { indices: stack.clone(), alpha, beta, gamma });
            }
        }
        if let Some(w) = visit(poly, tol, v + 1, stack, checked) {
            return Some(w);
        }
        stack.pop();
    }
    None
}

fn has_area(poly: &MarkedPolygon, idx: &[usize]) -> bool {
    let pts: Vec<P2> = idx.iter().map(|&i| poly.vertex(i)).collect();
    crate::geometry::polygon_area2(&pts) > poly.tol_geom().max(1e-12)
}

/// `(α, β, γ)` of the subpolygon with the given sorted vertex indices.
fn measure(poly: &MarkedPolygon, idx: &[usize]) -> (f64, f64, f64) {
    let n = poly.len();
    let m = idx.len();
    let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
    for s in 0..m {
        let (i, j) = (idx[s], idx[(s + 1) % m]);
        let len = (poly.vertex(j) - poly.vertex(i)).norm();
        gamma += len;
        if (i + 1) % n == j {
            match poly.mark(i) {
                Mark::Plus => alpha += len,
                Mark::Minus => beta += len,
            }
        }
    }
    (alpha, beta, gamma)
}

/// Compares `|CD|` with `|AB|` for a convex quadrilateral `ABCD` with
/// `|BC| = |AD|` and interior angles at `A` and `B` summing to at most `π`.
pub fn quadrilateral_compare(
    a: P2,
    b: P2,
    c: P2,
    d: P2,
    tol_geom: f64,
) -> Result<QuadrilateralComparison, DomainError> {
    let pts = [a, b, c, d];
    let turns: Vec<f64> = (0..4)
        .map(|i| cross(pts[(i + 1) % 4] - pts[i], pts[(i + 2) % 4] - pts[(i + 1) % 4]))
        .collect();
    let ccw = turns.iter().all(|&t| t > tol_geom);
    let cw = turns.iter().all(|&t| t < -tol_geom);
    if !(ccw || cw) {
        return Err(DomainError::QuadrilateralPrecondition("ABCD is not strictly convex".into()));
    }
    let bc = (c - b).norm();
    let ad = (d - a).norm();
    if (bc - ad).abs() > tol_geom {
        return Err(DomainError::QuadrilateralPrecondition(format!("|BC| = {bc} but |AD| = {ad}")));
    }
    let angle = |p: P2, q: P2, r: P2| {
        let (u, v) = (q - p, r - p);
        cross(u, v).abs().atan2(u.dot(&v))
    };
    let sum = angle(a, b, d) + angle(b, c, a);
    if sum > std::f64::consts::PI + tol_geom {
        return Err(DomainError::QuadrilateralPrecondition(format!(
            "angles at A and B sum to {sum} > pi"
        )));
    }
    let ab = (b - a).norm();
    let cd = (d - c).norm();
    let ordering = if (cd - ab).abs() <= tol_geom {
        LengthOrdering::Equal
    } else if cd < ab {
        LengthOrdering::Less
    } else {
        LengthOrdering::Greater
    };
    let is_parallelogram = ((a.coords + c.coords) - (b.coords + d.coords)).norm() <= tol_geom;
    Ok(QuadrilateralComparison { ordering, is_parallelogram, cd, ab })
}

/// `r₀ = min(1, ½ min_p dist(p, edges not incident to p))`.
pub fn inner_radius(poly: &MarkedPolygon) -> Result<f64, DomainError> {
    let n = poly.len();
    let mut best = f64::INFINITY;
    for p in 0..n {
        for e in 0..n {
            if e == p || (e + 1) % n == p {
                continue;
            }
            let (a, b) = poly.edge(e);
            best = best.min(dist_point_segment(poly.vertex(p), a, b));
        }
    }
    if best <= poly.tol_geom() {
        return Err(DomainError::Degenerate(format!(
            "vertex at distance {best} from a non-incident edge"
        )));
    }
    Ok((0.5 * best).min(1.0))
}
