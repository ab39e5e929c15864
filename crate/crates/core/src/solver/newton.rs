//! Damped Newton iteration on the discrete area functional.

use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Col, Side};
use rayon::prelude::*;

use super::{triangle_gradient, GraphSolution, SolveOptions, SolverError};
use crate::geometry::V2;
use crate::mesh::TriMesh;

/// Local pair order for the packed 3×3 symmetric element matrix.
const PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];

/// Gauss–Legendre points and weights on `[0, 1]`.
const GAUSS: [(f64, f64); 3] = [
    (0.112_701_665_379_258_31, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

/// Boundary term `Σ_e ∫_e r(u − φ_e) ds` of the relaxed area functional, with
/// `r(x) = √(x² + ε²) − ε` a smoothed `|x|`.
#[derive(Debug, Clone)]
pub(crate) struct Relaxation {
    /// Mesh nodes, length and data value of each boundary edge.
    pub edges: Vec<([usize; 2], f64, f64)>,
    pub eps: f64,
}

impl Relaxation {
    fn r(&self, x: f64) -> (f64, f64, f64) {
        let q = (x * x + self.eps * self.eps).sqrt();
        (x * x / (q + self.eps), x / q, self.eps * self.eps / (q * q * q))
    }

    fn energy(&self, u: &[f64]) -> f64 {
        self.edges
            .iter()
            .map(|&([a, b], len, phi)| {
                GAUSS.iter().map(|&(s, w)| w * self.r((1.0 - s) * u[a] + s * u[b] - phi).0).sum::<f64>() * len
            })
            .sum()
    }

    /// Gradient `[∂a, ∂b]` and Hessian `[aa, bb, ab]` of one edge term.
    fn local(&self, u: &[f64], e: usize) -> ([f64; 2], [f64; 3]) {
        let ([a, b], len, phi) = self.edges[e];
        let (mut g, mut h) = ([0.0; 2], [0.0; 3]);
        for &(s, w) in &GAUSS {
            let (_, d1, d2) = self.r((1.0 - s) * u[a] + s * u[b] - phi);
            let (la, lb) = (1.0 - s, s);
            g[0] += w * len * d1 * la;
            g[1] += w * len * d1 * lb;
            h[0] += w * len * d2 * la * la;
            h[1] += w * len * d2 * lb * lb;
            h[2] += w * len * d2 * la * lb;
        }
        (g, h)
    }
}

/// Sparsity pattern of the Hessian restricted to the free nodes (lower
/// triangle, column major).
struct Pattern {
    /// Unknown index of each node, `usize::MAX` when fixed.
    dof: Vec<usize>,
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    /// Position in the value array of each element pair, `usize::MAX` when a
    /// node of the pair is fixed.
    slots: Vec<[usize; 6]>,
}

impl Pattern {
    fn new(mesh: &TriMesh, fixed: &[bool]) -> Self {
        let mut dof = vec![usize::MAX; mesh.num_nodes()];
        let mut n = 0;
        for v in 0..mesh.num_nodes() {
            if !fixed[v] {
                dof[v] = n;
                n += 1;
            }
        }
        let mut cols: Vec<Vec<usize>> = (0..n).map(|c| vec![c]).collect();
        for &[a, b] in mesh.edges() {
            let (da, db) = (dof[a], dof[b]);
            if da != usize::MAX && db != usize::MAX {
                cols[da.min(db)].push(da.max(db));
            }
        }
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        col_ptr.push(0);
        for col in &mut cols {
            col.sort_unstable();
            col.dedup();
            row_idx.extend_from_slice(col);
            col_ptr.push(row_idx.len());
        }
        let mut pat = Self { dof, n, col_ptr, row_idx, slots: Vec::new() };
        pat.slots = mesh.triangles().iter().map(|tri| PAIRS.map(|(i, j)| pat.slot(tri[i], tri[j]))).collect();
        pat
    }

    /// Value-array position of the node pair, `usize::MAX` if either is fixed.
    fn slot(&self, a: usize, b: usize) -> usize {
        let (da, db) = (self.dof[a], self.dof[b]);
        if da == usize::MAX || db == usize::MAX {
            return usize::MAX;
        }
        let (r, c) = (da.max(db), da.min(db));
        let lo = self.col_ptr[c];
        lo + self.row_idx[lo..self.col_ptr[c + 1]].binary_search(&r).expect("pattern entry")
    }
}

/// Per-triangle energy, gradient and packed Hessian.
fn element(mesh: &TriMesh, u: &[f64], t: usize) -> (f64, [f64; 3], [f64; 6]) {
    let area = mesh.area(t);
    let phi = mesh.hat_gradients(t);
    let g = triangle_gradient(mesh, u, t);
    let g2 = g.norm_squared();
    let w = (1.0 + g2).sqrt();
    let energy = area * g2 / (1.0 + w);
    let grad = [0, 1, 2].map(|k| area * g.dot(&phi[k]) / w);
    // (I + g⊥g⊥ᵀ) / W³
    let gp = V2::new(-g.y, g.x);
    let s = area / (w * w * w);
    let hess = PAIRS.map(|(i, j)| s * (phi[i].dot(&phi[j]) + gp.dot(&phi[i]) * gp.dot(&phi[j])));
    (energy, grad, hess)
}

fn area_energy(mesh: &TriMesh, u: &[f64]) -> f64 {
    let parts: Vec<f64> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let g = triangle_gradient(mesh, u, t);
            let g2 = g.norm_squared();
            mesh.area(t) * g2 / (1.0 + (1.0 + g2).sqrt())
        })
        .collect();
    parts.iter().sum()
}

fn energy(mesh: &TriMesh, relax: Option<&Relaxation>, u: &[f64]) -> f64 {
    area_energy(mesh, u) + relax.map_or(0.0, |r| r.energy(u))
}

/// Gradient over the free nodes, and the Hessian values when requested.
fn assemble(
    mesh: &TriMesh,
    pat: &Pattern,
    relax: Option<&Relaxation>,
    u: &[f64],
    mut values: Option<&mut [f64]>,
) -> Vec<f64> {
    let parts: Vec<(f64, [f64; 3], [f64; 6])> =
        (0..mesh.num_triangles()).into_par_iter().map(|t| element(mesh, u, t)).collect();
    let mut grad = vec![0.0; pat.n];
    if let Some(vals) = values.as_deref_mut() {
        vals.iter_mut().for_each(|x| *x = 0.0);
    }
    for ((tri, slots), (_, g, h)) in mesh.triangles().iter().zip(&pat.slots).zip(&parts) {
        for k in 0..3 {
            let d = pat.dof[tri[k]];
            if d != usize::MAX {
                grad[d] += g[k];
            }
        }
        if let Some(vals) = values.as_deref_mut() {
            for (s, hv) in slots.iter().zip(h) {
                if *s != usize::MAX {
                    vals[*s] += hv;
                }
            }
        }
    }
    if let Some(r) = relax {
        for e in 0..r.edges.len() {
            let ([a, b], _, _) = r.edges[e];
            let (g, h) = r.local(u, e);
            for (v, gv) in [(a, g[0]), (b, g[1])] {
                if pat.dof[v] != usize::MAX {
                    grad[pat.dof[v]] += gv;
                }
            }
            if let Some(vals) = values.as_deref_mut() {
                for ((p, q), hv) in [((a, a), h[0]), ((b, b), h[1]), ((a, b), h[2])] {
                    let s = pat.slot(p, q);
                    if s != usize::MAX {
                        vals[s] += hv;
                    }
                }
            }
        }
    }
    grad
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn boundary_mask(mesh: &TriMesh) -> Vec<bool> {
    mesh.kinds().iter().map(|k| k.is_boundary()).collect()
}

pub(crate) fn functional_gradient_norm(mesh: &TriMesh, u: &[f64]) -> f64 {
    let pat = Pattern::new(mesh, &boundary_mask(mesh));
    norm(&assemble(mesh, &pat, None, u, None))
}

/// Solves with the given boundary values; interior entries of
/// `boundary_values` are ignored and the iteration starts from zero there.
pub fn solve_dirichlet(
    mesh: Arc<TriMesh>,
    boundary_values: &[f64],
    opts: &SolveOptions,
) -> Result<GraphSolution, SolverError> {
    let mut start = boundary_values.to_vec();
    for (v, k) in mesh.kinds().iter().enumerate() {
        if !k.is_boundary() && v < start.len() {
            start[v] = 0.0;
        }
    }
    solve_dirichlet_from(mesh, start, opts)
}

/// Solves with boundary values taken from the boundary entries of `start`
/// and the interior entries as initial iterate.
pub fn solve_dirichlet_from(
    mesh: Arc<TriMesh>,
    start: Vec<f64>,
    opts: &SolveOptions,
) -> Result<GraphSolution, SolverError> {
    if start.len() != mesh.num_nodes() {
        return Err(SolverError::Length { got: start.len(), expected: mesh.num_nodes() });
    }
    if let Some(v) = start.iter().position(|x| !x.is_finite()) {
        return Err(SolverError::NonFiniteBoundary(v));
    }
    let fixed = boundary_mask(&mesh);
    minimize(mesh, start, &fixed, None, opts)
}

/// Minimizes the area functional, plus the relaxation term if given, over
/// the nodes not marked `fixed`, starting from `start`.
pub(crate) fn minimize(
    mesh: Arc<TriMesh>,
    start: Vec<f64>,
    fixed: &[bool],
    relax: Option<&Relaxation>,
    opts: &SolveOptions,
) -> Result<GraphSolution, SolverError> {
    if !(opts.tol_solve > 0.0 && opts.armijo > 0.0 && opts.armijo < 0.5) {
        return Err(SolverError::InvalidOption(format!("{opts:?}")));
    }
    let pat = Pattern::new(&mesh, fixed);
    let mut u = start;
    if pat.n == 0 {
        return Ok(GraphSolution::assemble(mesh, u, None, 0.0, 0));
    }
    let sym = SymbolicSparseColMatRef::new_checked(pat.n, pat.n, &pat.col_ptr, None, &pat.row_idx);
    let symbolic = SymbolicLlt::try_new(sym, Side::Lower).map_err(|e| SolverError::Factorization(format!("{e:?}")))?;

    let mut history = Vec::new();
    let mut values = vec![0.0; pat.row_idx.len()];
    let mut e_cur = energy(&mesh, relax, &u);
    for iter in 0..opts.max_iter {
        let grad = assemble(&mesh, &pat, relax, &u, Some(&mut values));
        let gnorm = norm(&grad);
        history.push(gnorm);
        if gnorm <= opts.tol_solve {
            return Ok(GraphSolution::assemble(mesh, u, None, gnorm, iter));
        }

        let mat = SparseColMatRef::new(sym, &values);
        let llt = Llt::try_new_with_symbolic(symbolic.clone(), mat, Side::Lower)
            .map_err(|e| SolverError::Factorization(format!("{e:?}")))?;
        let rhs = Col::<f64>::from_fn(pat.n, |i| -grad[i]);
        let step = llt.solve(&rhs);
        let slope: f64 = (0..pat.n).map(|i| grad[i] * step[i]).sum();

        let mut alpha = 1.0;
        let mut trial = u.clone();
        let mut accepted = false;
        for _ in 0..60 {
            for (v, &d) in pat.dof.iter().enumerate() {
                if d != usize::MAX {
                    trial[v] = u[v] + alpha * step[d];
                }
            }
            let e_new = energy(&mesh, relax, &trial);
            if e_new <= e_cur + opts.armijo * alpha * slope {
                e_cur = e_new;
                accepted = true;
                break;
            }
            // energy differences below roundoff: fall back on the gradient
            if (e_new - e_cur).abs() <= 1e-14 * e_cur.abs().max(1.0)
                && norm(&assemble(&mesh, &pat, relax, &trial, None)) < gnorm
            {
                e_cur = e_new;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
        std::mem::swap(&mut u, &mut trial);
    }
    Err(SolverError::NonConvergence { iterations: history.len(), history })
}

/// Least-squares potential: minimizes `Σ_T A_T |∇x − ω_T|²` over P1 `x`
/// with `x[pin] = pin_value`.
pub(crate) fn least_squares_potential(
    mesh: &TriMesh,
    forms: &[V2],
    pin: usize,
    pin_value: f64,
) -> Result<Vec<f64>, SolverError> {
    let mut fixed = vec![false; mesh.num_nodes()];
    fixed[pin] = true;
    let pat = Pattern::new(mesh, &fixed);
    let mut values = vec![0.0; pat.row_idx.len()];
    let mut rhs = vec![0.0; pat.n];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.area(t);
        let phi = mesh.hat_gradients(t);
        for (k, &(i, j)) in PAIRS.iter().enumerate() {
            let slot = pat.slots[t][k];
            if slot != usize::MAX {
                values[slot] += area * phi[i].dot(&phi[j]);
            }
        }
        for i in 0..3 {
            let d = pat.dof[tri[i]];
            if d == usize::MAX {
                continue;
            }
            rhs[d] += area * phi[i].dot(&forms[t]);
            // move the pinned value to the right-hand side
            for j in 0..3 {
                if tri[j] == pin {
                    rhs[d] -= area * phi[i].dot(&phi[j]) * pin_value;
                }
            }
        }
    }
    let mut x = vec![pin_value; mesh.num_nodes()];
    if pat.n == 0 {
        return Ok(x);
    }
    let sym = SymbolicSparseColMatRef::new_checked(pat.n, pat.n, &pat.col_ptr, None, &pat.row_idx);
    let symbolic = SymbolicLlt::try_new(sym, Side::Lower).map_err(|e| SolverError::Factorization(format!("{e:?}")))?;
    let llt = Llt::try_new_with_symbolic(symbolic, SparseColMatRef::new(sym, &values), Side::Lower)
        .map_err(|e| SolverError::Factorization(format!("{e:?}")))?;
    let sol = llt.solve(&Col::<f64>::from_fn(pat.n, |i| rhs[i]));
    for (v, &d) in pat.dof.iter().enumerate() {
        if d != usize::MAX {
            x[v] = sol[d];
        }
    }
    Ok(x)
}
