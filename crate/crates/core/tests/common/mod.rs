//! Helpers shared by the integration tests: closed-form oracles, random
//! unitary polygons and special domains.

#![allow(dead_code)]

use std::f64::consts::PI;

use rand::Rng;
use saddle_tower::geometry::{P2, V2};
use saddle_tower::{GraphSolution, MarkedPolygon};

/// Jenkins–Serrin solution on the unit square with `+∞` on the horizontal
/// edges and `−∞` on the vertical ones, normalized at the center.
pub fn square_oracle(p: P2) -> f64 {
    ((PI * (p.x - 0.5)).cos() / (PI * (p.y - 0.5)).cos()).ln() / PI
}

/// Left side of the minimal graph equation, from central differences of `f`.
pub fn mse_residual(f: impl Fn(f64, f64) -> f64, x: f64, y: f64, d: f64) -> f64 {
    let fx = (f(x + d, y) - f(x - d, y)) / (2.0 * d);
    let fy = (f(x, y + d) - f(x, y - d)) / (2.0 * d);
    let fxx = (f(x + d, y) - 2.0 * f(x, y) + f(x - d, y)) / (d * d);
    let fyy = (f(x, y + d) - 2.0 * f(x, y) + f(x, y - d)) / (d * d);
    let fxy = (f(x + d, y + d) - f(x + d, y - d) - f(x - d, y + d) + f(x - d, y - d)) / (4.0 * d * d);
    (1.0 + fy * fy) * fxx - 2.0 * fx * fy * fxy + (1.0 + fx * fx) * fyy
}

/// Exact residual of the square oracle from its analytic derivatives.
pub fn square_oracle_residual(p: P2) -> f64 {
    let (a, b) = (PI * (p.x - 0.5), PI * (p.y - 0.5));
    let ux = -a.tan();
    let uy = b.tan();
    let uxx = -PI / a.cos().powi(2);
    let uyy = PI / b.cos().powi(2);
    (1.0 + uy * uy) * uxx + (1.0 + ux * ux) * uyy
}

/// Sup of `|u − f|` over nodes at distance at least `d` from the boundary.
pub fn sup_error(sol: &GraphSolution, f: impl Fn(P2) -> f64, d: f64) -> f64 {
    let mesh = sol.mesh();
    let dist = mesh.boundary_distances();
    (0..mesh.num_nodes())
        .filter(|&v| dist[v] >= d)
        .map(|v| (sol.value(v) - f(mesh.point(v))).abs())
        .fold(0.0, f64::max)
}

pub fn unit(phi: f64) -> V2 {
    V2::new(phi.cos(), phi.sin())
}

/// Random strictly convex polygon with `n` unit edges. Edge directions are a
/// jittered regular fan; the last two close the loop.
pub fn random_unitary_polygon(rng: &mut impl Rng, n: usize) -> MarkedPolygon {
    assert!(n >= 4 && n % 2 == 0);
    let gap_min = 1e-3;
    loop {
        let spread = rng.random_range(0.0..0.9);
        let offset = rng.random_range(0.0..2.0 * PI);
        let step = 2.0 * PI / n as f64;
        let mut dirs: Vec<f64> =
            (0..n - 2).map(|k| offset + step * (k as f64 + spread * rng.random_range(-0.5..0.5))).collect();
        let rest = -dirs.iter().map(|&a| unit(a)).sum::<V2>();
        let len = rest.norm();
        if !(len > 1e-6 && len < 2.0 - 1e-6) {
            continue;
        }
        let mid = rest.y.atan2(rest.x);
        let half = (0.5 * len).acos();
        dirs.push(mid - half);
        dirs.push(mid + half);
        let mut dirs: Vec<f64> = dirs.into_iter().map(|a| a.rem_euclid(2.0 * PI)).collect();
        dirs.sort_by(f64::total_cmp);
        let ok = (0..n).all(|i| {
            let next = if i + 1 < n { dirs[i + 1] } else { dirs[0] + 2.0 * PI };
            let gap = next - dirs[i];
            gap > gap_min && gap < PI - gap_min
        });
        if !ok {
            continue;
        }
        let start = P2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let mut pts = vec![start];
        for &a in &dirs[..n - 1] {
            let last = *pts.last().unwrap();
            pts.push(last + unit(a));
        }
        if let Ok(poly) = MarkedPolygon::with_default_tol(pts) {
            if poly.is_strictly_convex() {
                return poly;
            }
        }
    }
}

/// Parallelogram with sides `k − 1` and `1` along `(1, 0)` and
/// `(cos β, sin β)`, subdivided into `2k` unit edges.
pub fn special_domain(k: usize, beta: f64) -> MarkedPolygon {
    let a = V2::new(1.0, 0.0);
    let b = unit(beta);
    let mut pts = vec![P2::origin()];
    let steps = std::iter::repeat_n(a, k - 1)
        .chain(std::iter::once(b))
        .chain(std::iter::repeat_n(-a, k - 1));
    for s in steps {
        let last = *pts.last().unwrap();
        pts.push(last + s);
    }
    MarkedPolygon::with_default_tol(pts).expect("special domain is valid")
}
