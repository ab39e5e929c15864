//! The exhaustion `u_n` on `Ω_n`, `n = 1 … n_max`, normalized at `Q ∈ Ω₁`.

use rayon::prelude::*;
use serde::Serialize;

use super::TowerError;
use crate::conjugation::{conjugate_function, ConjugateFunction};
use crate::domain::{build_exhaustion_domain, classify_domain, DomainClass, MarkedPolygon, UnboundedDomainSpec};
use crate::geometry::P2;
use crate::solver::{
    detect_divergence_lines_with, solve_jenkins_serrin, DivergenceReport, GraphSolution, JsOptions,
};

#[derive(Debug, Clone, PartialEq)]
pub struct LimitOptions {
    pub js: JsOptions,
    /// The compact is `{x ∈ Ω₁ : dist(x, ∂Ω₁) ≥ compact_dist}`.
    pub compact_dist: f64,
    /// Grid spacing of the compact sample.
    pub compact_spacing: f64,
    /// Allowed excursion of `ψ_n` outside `[0, 1]`.
    pub psi_tol: f64,
    /// A second truncation schedule; when set every `Ω_n` is solved again
    /// with it and the sup discrepancy on the compact is reported.
    pub uniqueness_schedule: Option<Vec<f64>>,
}

impl Default for LimitOptions {
    fn default() -> Self {
        Self {
            js: JsOptions::default(),
            compact_dist: 0.1,
            compact_spacing: 0.05,
            psi_tol: 1e-2,
            uniqueness_schedule: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub n_max: usize,
    pub h: f64,
    pub q: [f64; 2],
    /// Number of sample points in the compact.
    pub compact_points: usize,
    /// `differences[k] = sup |u_{k+2} − u_{k+1}|` on the compact.
    pub differences: Vec<f64>,
    pub differences_decreasing: bool,
    /// Divergence report for each `n`, against `u_{n−1}` (against itself for
    /// `n = 1`).
    pub divergence: Vec<DivergenceReport>,
    /// `[min ψ_n, max ψ_n]`.
    pub psi_bounds: Vec<[f64; 2]>,
    pub psi_within: Vec<bool>,
    /// Sup discrepancy with the alternative schedule, per `n`.
    pub uniqueness: Option<Vec<f64>>,
    pub converges: bool,
}

#[derive(Debug, Clone)]
pub struct LimitRun {
    /// `u_n` for `n = 1 … n_max`.
    pub solutions: Vec<GraphSolution>,
    /// `ψ_n` with `ψ_n(p₀) = 0`.
    pub psi: Vec<ConjugateFunction>,
    pub report: ConvergenceReport,
}

fn compact_sample(omega1: &MarkedPolygon, polys: &[MarkedPolygon], dist: f64, spacing: f64) -> Vec<P2> {
    let vs = omega1.vertices();
    let (mut lo, mut hi) = (vs[0], vs[0]);
    for v in vs {
        lo = lo.inf(v);
        hi = hi.sup(v);
    }
    let nx = ((hi.x - lo.x) / spacing).ceil() as usize;
    let ny = ((hi.y - lo.y) / spacing).ceil() as usize;
    let mut pts = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            let p = P2::new(lo.x + i as f64 * spacing, lo.y + j as f64 * spacing);
            if omega1.contains(p, 0.0)
                && omega1.boundary_distance(p) >= dist
                && polys.iter().all(|poly| poly.contains(p, 0.0))
            {
                pts.push(p);
            }
        }
    }
    pts
}

fn sup_difference(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn sample(sol: &GraphSolution, pts: &[P2], n: usize) -> Result<Vec<f64>, TowerError> {
    let locator = sol.mesh().locator();
    pts.iter()
        .map(|&p| {
            locator.interpolate(sol.values(), p).ok_or_else(|| TowerError::InvalidOption(format!(
                "compact point ({}, {}) not located in Ω_{n}",
                p.x, p.y
            )))
        })
        .collect()
}

/// Solves on `Ω_1 … Ω_{n_max}` concurrently and assesses the sequence.
pub fn solve_limit(
    spec: &UnboundedDomainSpec,
    n_max: usize,
    h: f64,
    q: P2,
    opts: &LimitOptions,
) -> Result<LimitRun, TowerError> {
    let class = classify_domain(spec)?;
    if class != DomainClass::General {
        return Err(TowerError::UnsupportedClass(class));
    }
    if n_max == 0 {
        return Err(TowerError::InvalidOption("n_max must be at least 1".into()));
    }
    if !(opts.compact_spacing > 0.0 && opts.compact_dist >= 0.0 && opts.psi_tol >= 0.0) {
        return Err(TowerError::InvalidOption("compact spacing and tolerances must be positive".into()));
    }
    let polys = (1..=n_max).map(|n| build_exhaustion_domain(spec, n)).collect::<Result<Vec<_>, _>>()?;
    if !polys[0].contains(q, 0.0) || polys[0].boundary_distance(q) <= 0.0 {
        return Err(TowerError::InvalidOption(format!("normalization point ({}, {}) is not inside Ω_1", q.x, q.y)));
    }
    let js = JsOptions { h, ..opts.js.clone() };
    let alt = opts.uniqueness_schedule.as_ref().map(|s| JsOptions { m_schedule: s.clone(), ..js.clone() });
    let pts = compact_sample(&polys[0], &polys, opts.compact_dist, opts.compact_spacing);

    type Solved = (GraphSolution, ConjugateFunction, Vec<f64>, Option<f64>);
    let solved = polys
        .par_iter()
        .enumerate()
        .map(|(k, poly)| -> Result<Solved, TowerError> {
            let n = k + 1;
            let sol = solve_jenkins_serrin(poly, q, &js).map_err(|source| TowerError::Solver { n, source })?;
            let psi = conjugate_function(&sol, 0, 0.0)?;
            let values = sample(&sol, &pts, n)?;
            let unique = match &alt {
                None => None,
                Some(alt) => {
                    let other = solve_jenkins_serrin(poly, q, alt).map_err(|source| TowerError::Solver { n, source })?;
                    Some(sup_difference(&values, &sample(&other, &pts, n)?))
                }
            };
            Ok((sol, psi, values, unique))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut solutions = Vec::with_capacity(n_max);
    let mut psi = Vec::with_capacity(n_max);
    let mut samples = Vec::with_capacity(n_max);
    let mut uniqueness = alt.as_ref().map(|_| Vec::with_capacity(n_max));
    for (sol, p, values, unique) in solved {
        solutions.push(sol);
        psi.push(p);
        samples.push(values);
        if let (Some(u), Some(d)) = (uniqueness.as_mut(), unique) {
            u.push(d);
        }
    }

    let differences: Vec<f64> = samples.windows(2).map(|w| sup_difference(&w[0], &w[1])).collect();
    let differences_decreasing = differences.windows(2).all(|w| w[1] <= w[0] + js.tol_js);
    let divergence = (0..n_max)
        .into_par_iter()
        .map(|k| {
            let pair = [solutions[k.saturating_sub(1)].clone(), solutions[k].clone()];
            detect_divergence_lines_with(&pair, &js.divergence).map_err(|source| TowerError::Solver { n: k + 1, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let psi_bounds: Vec<[f64; 2]> = psi.iter().map(|p| [p.min(), p.max()]).collect();
    let psi_within: Vec<bool> =
        psi_bounds.iter().map(|b| b[0] >= -opts.psi_tol && b[1] <= 1.0 + opts.psi_tol).collect();
    let converges =
        differences_decreasing && divergence.iter().all(|d| d.converges) && psi_within.iter().all(|&b| b);
    let report = ConvergenceReport {
        n_max,
        h,
        q: [q.x, q.y],
        compact_points: pts.len(),
        differences,
        differences_decreasing,
        divergence,
        psi_bounds,
        psi_within,
        uniqueness,
        converges,
    };
    Ok(LimitRun { solutions, psi, report })
}
