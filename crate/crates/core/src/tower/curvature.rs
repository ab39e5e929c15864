//! Gaussian curvature of a discrete graph from local quadratic fits.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::TowerError;
use crate::geometry::P2;
use crate::solver::GraphSolution;

#[derive(Debug, Clone, Serialize)]
pub struct CurvatureReport {
    /// `K` per node; `None` on boundary nodes.
    pub k: Vec<Option<f64>>,
    /// `sup |K|` over nodes at distance at least `h` from the boundary.
    pub sup_abs: f64,
    /// Node attaining the sup.
    pub argmax: Option<usize>,
    pub r0: f64,
    /// `sup |K| · r₀²`.
    pub ratio: f64,
}

/// Fits `u ≈ c + a·d + ½ dᵀHd` over the two-ring of `v` and returns
/// `(u₁₁u₂₂ − u₁₂²)/W⁴` with `W² = 1 + |a|²`.
fn fit_curvature(sol: &GraphSolution, ring: &[usize], v: usize) -> Option<f64> {
    let mesh = sol.mesh();
    if ring.len() < 6 {
        return None;
    }
    let o = mesh.point(v);
    let s = ring.iter().map(|&w| (mesh.point(w) - o).norm()).fold(0.0, f64::max);
    if s <= 0.0 {
        return None;
    }
    let mut a = DMatrix::zeros(ring.len(), 6);
    let mut b = DVector::zeros(ring.len());
    for (r, &w) in ring.iter().enumerate() {
        let d = (mesh.point(w) - o) / s;
        a.row_mut(r).copy_from_slice(&[1.0, d.x, d.y, 0.5 * d.x * d.x, d.x * d.y, 0.5 * d.y * d.y]);
        b[r] = sol.value(w) - sol.value(v);
    }
    let svd = a.svd(true, true);
    let sv = &svd.singular_values;
    if sv.min() <= 1e-10 * sv.max() {
        return None;
    }
    let c = svd.solve(&b, 0.0).ok()?;
    let (ux, uy) = (c[1] / s, c[2] / s);
    let (uxx, uxy, uyy) = (c[3] / (s * s), c[4] / (s * s), c[5] / (s * s));
    let w2 = 1.0 + ux * ux + uy * uy;
    Some((uxx * uyy - uxy * uxy) / (w2 * w2))
}

fn two_ring(nbrs: &[Vec<usize>], v: usize) -> Vec<usize> {
    let mut ring = vec![v];
    for &w in &nbrs[v] {
        ring.push(w);
        ring.extend_from_slice(&nbrs[w]);
    }
    ring.sort_unstable();
    ring.dedup();
    ring
}

/// Per-node curvature and the normalized sup over `{dist ≥ h}`.
pub fn curvature_estimate(sol: &GraphSolution, r0: f64) -> Result<CurvatureReport, TowerError> {
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(TowerError::InvalidOption(format!("inner radius {r0} must be positive")));
    }
    let mesh = sol.mesh();
    let nbrs = mesh.neighbors();
    let dist = mesh.boundary_distances();
    let h = mesh.h();
    let k = (0..mesh.num_nodes())
        .into_par_iter()
        .map(|v| {
            if mesh.kind(v).is_boundary() {
                return Ok(None);
            }
            fit_curvature(sol, &two_ring(&nbrs, v), v).map(Some).ok_or(TowerError::CurvatureFit(v))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut sup_abs = 0.0;
    let mut argmax = None;
    for (v, kv) in k.iter().enumerate() {
        if let Some(kv) = kv {
            if dist[v] >= h && kv.abs() > sup_abs {
                sup_abs = kv.abs();
                argmax = Some(v);
            }
        }
    }
    Ok(CurvatureReport { k, sup_abs, argmax, r0, ratio: sup_abs * r0 * r0 })
}

/// Curvature at the node nearest `p`.
pub fn curvature_at(sol: &GraphSolution, p: P2) -> Result<f64, TowerError> {
    let mesh = sol.mesh();
    let v = mesh.nearest_node(p);
    let nbrs = mesh.neighbors();
    fit_curvature(sol, &two_ring(&nbrs, v), v).ok_or(TowerError::CurvatureFit(v))
}

/// Angle defect of the graph mesh divided by a third of the incident area,
/// at interior nodes.
pub fn angle_defect(sol: &GraphSolution) -> Vec<Option<f64>> {
    let mesh = sol.mesh();
    let n = mesh.num_nodes();
    let mut angle = vec![0.0; n];
    let mut area = vec![0.0; n];
    let lift = |v: usize| {
        let p = mesh.point(v);
        nalgebra::Vector3::new(p.x, p.y, sol.value(v))
    };
    for tri in mesh.triangles() {
        let x = tri.map(lift);
        let a = 0.5 * (x[1] - x[0]).cross(&(x[2] - x[0])).norm();
        for c in 0..3 {
            let e1 = x[(c + 1) % 3] - x[c];
            let e2 = x[(c + 2) % 3] - x[c];
            angle[tri[c]] += e1.angle(&e2);
            area[tri[c]] += a / 3.0;
        }
    }
    (0..n)
        .map(|v| (!mesh.kind(v).is_boundary() && area[v] > 0.0).then(|| (2.0 * PI - angle[v]) / area[v]))
        .collect()
}
