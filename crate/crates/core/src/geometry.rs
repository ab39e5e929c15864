//! Small planar helpers shared by the domain, mesh and solver code.

use nalgebra::{Point2, Vector2};

pub type P2 = Point2<f64>;
pub type V2 = Vector2<f64>;

/// z-component of the cross product `a × b`.
#[inline]
pub fn cross(a: V2, b: V2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Counterclockwise quarter turn, `J v`.
#[inline]
pub fn perp(v: V2) -> V2 {
    V2::new(-v.y, v.x)
}

#[inline]
pub fn rotate(v: V2, angle: f64) -> V2 {
    let (s, c) = angle.sin_cos();
    V2::new(c * v.x - s * v.y, s * v.x + c * v.y)
}

/// Distance from `p` to the closed segment `[a, b]`.
pub fn dist_point_segment(p: P2, a: P2, b: P2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Signed doubled area of the triangle `abc` (positive when counterclockwise).
#[inline]
pub fn orient(a: P2, b: P2, c: P2) -> f64 {
    cross(b - a, c - a)
}

/// Barycentric coordinates of `p` in the triangle `abc`.
pub fn barycentric(p: P2, a: P2, b: P2, c: P2) -> [f64; 3] {
    let d = orient(a, b, c);
    let l0 = orient(p, b, c) / d;
    let l1 = orient(a, p, c) / d;
    [l0, l1, 1.0 - l0 - l1]
}

/// Signed doubled area of a closed polygon.
pub fn polygon_area2(pts: &[P2]) -> f64 {
    let n = pts.len();
    (0..n)
        .map(|i| {
            let a = pts[i];
            let b = pts[(i + 1) % n];
            a.x * b.y - a.y * b.x
        })
        .sum()
}

/// Clips the line `origin + t·dir` against a convex counterclockwise polygon.
/// Returns the parameter interval of the intersection, if nonempty.
pub fn clip_line_convex(origin: P2, dir: V2, poly: &[P2]) -> Option<(f64, f64)> {
    let n = poly.len();
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for i in 0..n {
        let a = poly[i];
        let e = poly[(i + 1) % n] - a;
        // inside when cross(e, x - a) >= 0
        let f0 = cross(e, origin - a);
        let fd = cross(e, dir);
        if fd.abs() < 1e-300 {
            if f0 < 0.0 {
                return None;
            }
            continue;
        }
        let t = -f0 / fd;
        if fd > 0.0 {
            lo = lo.max(t);
        } else {
            hi = hi.min(t);
        }
    }
    (lo < hi).then_some((lo, hi))
}
