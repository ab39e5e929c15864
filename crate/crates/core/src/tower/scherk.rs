//! The half-plane Scherk solution `u_S = (1/π)·asinh(sin(πx₁)/sinh(πx₂))`
//! and the comparison of the exhaustion solutions with it along an end.

use std::f64::consts::PI;

use serde::Serialize;

use super::TowerError;
use crate::domain::{classify_domain, DomainClass, UnboundedDomainSpec};
use crate::geometry::{perp, P2, V2};
use crate::solver::GraphSolution;

/// Which end of the boundary, `p_n` with `n → +∞` or `n → −∞`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EndSign {
    Plus,
    Minus,
}

/// `u_S` with its first and second derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScherkJet {
    pub u: f64,
    pub ux: f64,
    pub uy: f64,
    pub uxx: f64,
    pub uxy: f64,
    pub uyy: f64,
}

impl ScherkJet {
    /// `(1 + u_y²)u_xx − 2u_x u_y u_xy + (1 + u_x²)u_yy`.
    pub fn residual(&self) -> f64 {
        (1.0 + self.uy * self.uy) * self.uxx - 2.0 * self.ux * self.uy * self.uxy
            + (1.0 + self.ux * self.ux) * self.uyy
    }
}

/// `u_S(x)` for `x₂ > 0`.
pub fn scherk_half_plane(x: P2) -> f64 {
    ((PI * x.x).sin() / (PI * x.y).sinh()).asinh() / PI
}

/// With `s = sin πx₁`, `c = cos πx₁`, `S = sinh πx₂`, `C = cosh πx₂` and
/// `D = S² + s²`: `u_x = c/√D`, `u_y = −sC/(S√D)`.
pub fn scherk_jet(x: P2) -> ScherkJet {
    let (s, c) = (PI * x.x).sin_cos();
    let (sh, ch) = ((PI * x.y).sinh(), (PI * x.y).cosh());
    let d = sh * sh + s * s;
    let rd = d.sqrt();
    let d32 = d * rd;
    ScherkJet {
        u: scherk_half_plane(x),
        ux: c / rd,
        uy: -s * ch / (sh * rd),
        uxx: -PI * s * (d + c * c) / d32,
        uxy: -PI * c * sh * ch / d32,
        uyy: PI * s * (d / (sh * sh) + ch * ch) / d32,
    }
}

/// Largest minimal surface equation residual of [`scherk_jet`] on a grid over `(0,2)×[0.1,3]`.
fn validation_residual() -> f64 {
    let n = 100;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let x = P2::new(2.0 * (i as f64 + 0.5) / n as f64, 0.1 + 2.9 * j as f64 / (n - 1) as f64);
            worst = worst.max(scherk_jet(x).residual().abs());
        }
    }
    worst
}

#[derive(Debug, Clone, Serialize)]
pub struct ScherkAsymptote {
    pub end: EndSign,
    /// `a_∞` or `a_{−∞}`.
    pub direction: [f64; 2],
    /// `J` applied to `direction`, pointing into the domain.
    pub normal: [f64; 2],
    pub vertical_period: [f64; 3],
    /// `2 a⊥`.
    pub horizontal_period: [f64; 2],
    pub validation_residual: f64,
}

impl ScherkAsymptote {
    /// `u_S` in the normalized frame.
    pub fn eval(&self, x: P2) -> f64 {
        scherk_half_plane(x)
    }

    pub fn jet(&self, x: P2) -> ScherkJet {
        scherk_jet(x)
    }

    /// `q_n = p_n + a⊥`.
    pub fn q_point(&self, p: P2) -> P2 {
        p + V2::new(self.normal[0], self.normal[1])
    }
}

pub fn scherk_reference(spec: &UnboundedDomainSpec, end: EndSign) -> Result<ScherkAsymptote, TowerError> {
    let class = classify_domain(spec)?;
    if class != DomainClass::General {
        return Err(TowerError::UnsupportedClass(class));
    }
    let residual = validation_residual();
    if !(residual <= 1e-8) {
        return Err(TowerError::ScherkValidation(residual));
    }
    let a = match end {
        EndSign::Plus => spec.a_inf(),
        EndSign::Minus => spec.a_neg_inf(),
    };
    let n = perp(a);
    Ok(ScherkAsymptote {
        end,
        direction: [a.x, a.y],
        normal: [n.x, n.y],
        vertical_period: [0.0, 0.0, 2.0],
        horizontal_period: [2.0 * n.x, 2.0 * n.y],
        validation_residual: residual,
    })
}

/// Axis-parallel rectangle `[x0, x1] × [y0, y1]` in the normalized frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Window {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

impl Window {
    pub fn new(x: [f64; 2], y: [f64; 2]) -> Result<Self, TowerError> {
        if !(x[0] < x[1] && y[0] < y[1] && y[0] > 0.0) {
            return Err(TowerError::InvalidOption(format!("window {x:?} x {y:?} must be nonempty above the edge")));
        }
        Ok(Self { x, y })
    }

    fn grid(&self, per_unit: usize) -> Vec<P2> {
        let nx = ((self.x[1] - self.x[0]) * per_unit as f64).ceil() as usize;
        let ny = ((self.y[1] - self.y[0]) * per_unit as f64).ceil() as usize;
        let mut pts = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                pts.push(P2::new(
                    self.x[0] + (self.x[1] - self.x[0]) * i as f64 / nx as f64,
                    self.y[0] + (self.y[1] - self.y[0]) * j as f64 / ny as f64,
                ));
            }
        }
        pts
    }
}

impl Default for Window {
    fn default() -> Self {
        Self { x: [0.2, 0.8], y: [0.5, 1.5] }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticDeviation {
    pub n: usize,
    /// Vertex `p_{2m}` carrying the frame origin.
    pub vertex: i64,
    pub deviation: f64,
}

/// Even vertex `p_{2m}` of `p₀ … pₙ` whose edge `[p_{2m}, p_{2m+1}]` is
/// farthest, in edge count, from both corners `p₀` and `pₙ` of `Ω_n`. Ties
/// go to the smaller `m`, away from the truncation corner `pₙ`.
pub fn asymptotic_frame_vertex(n: usize) -> i64 {
    let n = n as i64;
    let mut best = (i64::MIN, 0);
    let mut m = 0;
    while 2 * m < n {
        let depth = (2 * m).min(n - 1 - 2 * m);
        if depth > best.0 {
            best = (depth, 2 * m);
        }
        m += 1;
    }
    best.1
}

/// For each solution on `Ω_n` (with `n` read off its `4n` vertices), puts the
/// frame origin at `p_{2m}` from [`asymptotic_frame_vertex`] and returns the
/// deviation there.
pub fn asymptotic_compare(
    solutions: &[GraphSolution],
    spec: &UnboundedDomainSpec,
    window: &Window,
) -> Result<Vec<AsymptoticDeviation>, TowerError> {
    solutions
        .iter()
        .map(|sol| {
            let n = exhaustion_index(sol)?;
            let vertex = asymptotic_frame_vertex(n);
            Ok(AsymptoticDeviation { n, vertex, deviation: deviation_at(sol, spec, vertex, window)? })
        })
        .collect()
}

fn exhaustion_index(sol: &GraphSolution) -> Result<usize, TowerError> {
    let k = sol.mesh().polygon().len();
    if k % 4 != 0 {
        return Err(TowerError::InvalidOption(format!("solution domain has {k} vertices, not 4n")));
    }
    Ok(k / 4)
}

/// `sup |u(x) − u(0,1) − u_S(x)|` over the window, in the frame with origin
/// `p_vertex` and first axis `a_vertex`.
pub fn deviation_at(
    sol: &GraphSolution,
    spec: &UnboundedDomainSpec,
    vertex: i64,
    window: &Window,
) -> Result<f64, TowerError> {
    let origin = spec.vertex(vertex);
    let a = spec.edge_direction(vertex);
    let world = |x: P2| origin + a * x.x + perp(a) * x.y;
    let locator = sol.mesh().locator();
    let eval = |x: P2| {
        let p = world(x);
        locator.interpolate(sol.values(), p).ok_or(TowerError::WindowOutside(p.x, p.y))
    };
    let base = eval(P2::new(0.0, 1.0))?;
    let mut deviation: f64 = 0.0;
    for x in window.grid(40) {
        deviation = deviation.max((eval(x)? - base - scherk_half_plane(x)).abs());
    }
    Ok(deviation)
}
