//! Unbounded convex unitary domains given by turning-angle generators, and
//! the bounded exhaustion `Ω_n`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{chord_criterion, DomainError, MarkedPolygon, DEFAULT_TOL_GEOM};
use crate::geometry::{perp, P2, V2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DomainClass {
    General,
    Strip,
    InfiniteSpecial,
    HalfPlaneDegenerate,
}

/// Continuation of the turning angles outside the stored window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AngleTail {
    /// All angles outside the window vanish.
    Zero,
    /// `θ` decays by `ratio` per step on each side, starting from the window
    /// end values.
    Geometric { ratio: f64 },
}

/// Boundary `… p₋₁, p₀, p₁ …` with `p_{i+1} − p_i = a_i` unit and
/// `a_i = rot(a_{i−1}, θ_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnboundedDomainSpec {
    base: P2,
    direction: V2,
    window_start: i64,
    window: Vec<f64>,
    tail: AngleTail,
    tol_geom: f64,
    base_index: i64,
}

impl UnboundedDomainSpec {
    pub fn new(
        base: P2,
        direction: V2,
        window_start: i64,
        window: Vec<f64>,
        tail: AngleTail,
        tol_geom: f64,
    ) -> Result<Self, DomainError> {
        let norm = direction.norm();
        if !((norm - 1.0).abs() <= tol_geom.max(1e-12)) {
            return Err(DomainError::NonUnitDirection(norm));
        }
        if window.is_empty() {
            return Err(DomainError::InvalidGenerator("empty angle window".into()));
        }
        if let Some((k, &angle)) = window.iter().enumerate().find(|(_, a)| !(**a >= 0.0)) {
            return Err(DomainError::NegativeTurning { index: window_start + k as i64, angle });
        }
        if let AngleTail::Geometric { ratio } = tail {
            if !(0.0..1.0).contains(&ratio) {
                return Err(DomainError::InvalidGenerator(format!(
                    "geometric ratio {ratio} outside [0, 1)"
                )));
            }
        }
        let spec = Self {
            base,
            direction: direction / norm,
            window_start,
            window,
            tail,
            tol_geom,
            base_index: 0,
        };
        let total = spec.total_turning();
        if total > PI + tol_geom {
            return Err(DomainError::TurningExceedsPi(total));
        }
        Ok(spec)
    }

    /// Quarter plane: `θ₀ = π/2`, `p_i = (i, 0)` and `p₋ᵢ = (0, i)`.
    pub fn right_angle() -> Self {
        Self::new(
            P2::origin(),
            V2::new(1.0, 0.0),
            0,
            vec![PI / 2.0],
            AngleTail::Zero,
            DEFAULT_TOL_GEOM,
        )
        .expect("right-angle spec is valid")
    }

    /// `θ_i = θ₀ · ratio^{|i|}`.
    pub fn geometric(theta0: f64, ratio: f64) -> Result<Self, DomainError> {
        Self::new(
            P2::origin(),
            V2::new(1.0, 0.0),
            0,
            vec![theta0],
            AngleTail::Geometric { ratio },
            DEFAULT_TOL_GEOM,
        )
    }

    pub fn base(&self) -> P2 {
        self.base
    }

    pub fn initial_direction(&self) -> V2 {
        self.direction
    }

    pub fn window_start(&self) -> i64 {
        self.window_start
    }

    pub fn window(&self) -> &[f64] {
        &self.window
    }

    pub fn tail(&self) -> AngleTail {
        self.tail
    }

    pub fn tol_geom(&self) -> f64 {
        self.tol_geom
    }

    /// Offset of the current `p₀` in the indexing the spec was created
    /// with.
    pub fn base_index(&self) -> i64 {
        self.base_index
    }

    fn window_end(&self) -> i64 {
        self.window_start + self.window.len() as i64
    }

    /// Turning angle `θ_i` at `p_i`.
    pub fn theta(&self, i: i64) -> f64 {
        if i >= self.window_start && i < self.window_end() {
            return self.window[(i - self.window_start) as usize];
        }
        match self.tail {
            AngleTail::Zero => 0.0,
            AngleTail::Geometric { ratio } => {
                if i >= self.window_end() {
                    let steps = i - (self.window_end() - 1);
                    self.window[self.window.len() - 1] * ratio.powi(steps as i32)
                } else {
                    let steps = self.window_start - i;
                    self.window[0] * ratio.powi(steps as i32)
                }
            }
        }
    }

    fn right_tail_sum(&self) -> f64 {
        match self.tail {
            AngleTail::Zero => 0.0,
            AngleTail::Geometric { ratio } => self.window[self.window.len() - 1] * ratio / (1.0 - ratio),
        }
    }

    fn left_tail_sum(&self) -> f64 {
        match self.tail {
            AngleTail::Zero => 0.0,
            AngleTail::Geometric { ratio } => self.window[0] * ratio / (1.0 - ratio),
        }
    }

    /// `Σ_{i ≥ from} θ_i`.
    pub fn sum_from(&self, from: i64) -> f64 {
        let end = self.window_end();
        if from >= end {
            let tail: f64 = (end..from).map(|i| self.theta(i)).sum();
            return self.right_tail_sum() - tail;
        }
        let start = from.max(self.window_start);
        let mut s: f64 = (start..end).map(|i| self.theta(i)).sum();
        s += self.right_tail_sum();
        s += (from..start).map(|i| self.theta(i)).sum::<f64>();
        s
    }

    /// `Σ_{i ≤ to} θ_i`.
    pub fn sum_to(&self, to: i64) -> f64 {
        self.total_turning() - self.sum_from(to + 1)
    }

    pub fn total_turning(&self) -> f64 {
        self.window.iter().sum::<f64>() + self.left_tail_sum() + self.right_tail_sum()
    }

    /// Angle of `a_i` relative to `a₀`.
    fn cumulative(&self, i: i64) -> f64 {
        if i >= 0 {
            (1..=i).map(|j| self.theta(j)).sum()
        } else {
            -(i + 1..=0).map(|j| self.theta(j)).sum::<f64>()
        }
    }

    fn direction_at_angle(&self, phi: f64) -> V2 {
        let phi0 = self.direction.y.atan2(self.direction.x);
        unit_at(phi0 + phi)
    }

    /// Edge direction `a_i = p_{i+1} − p_i`.
    pub fn edge_direction(&self, i: i64) -> V2 {
        if i == 0 {
            return self.direction;
        }
        self.direction_at_angle(self.cumulative(i))
    }

    /// Vertex `p_i`.
    pub fn vertex(&self, i: i64) -> P2 {
        let mut p = self.base;
        if i >= 0 {
            for j in 0..i {
                p += self.edge_direction(j);
            }
        } else {
            for j in (i..0).rev() {
                p -= self.edge_direction(j);
            }
        }
        p
    }

    /// `a_∞ = lim a_n`.
    pub fn a_inf(&self) -> V2 {
        self.direction_at_angle(self.sum_from(1))
    }

    /// `a_{−∞} = lim a_{−n}`.
    pub fn a_neg_inf(&self) -> V2 {
        self.direction_at_angle(-self.sum_to(0))
    }

    /// Inward normal `J a_∞`.
    pub fn a_inf_perp(&self) -> V2 {
        perp(self.a_inf())
    }

    /// Shifts the labelling so that `p₀` is the vertex nearest the current
    /// one (scanning `0, 1, −1, 2, −2, …`) with positive turning.
    pub fn with_admissible_base(&self) -> Result<Self, DomainError> {
        let tol = self.tol_geom;
        let reach = self.window_start.abs().max(self.window_end().abs()) + 1;
        let pick = (0..=reach)
            .flat_map(|k| if k == 0 { vec![0] } else { vec![k, -k] })
            .find(|&i| self.theta(i) > tol)
            .ok_or(DomainError::NotGeneral(DomainClass::HalfPlaneDegenerate))?;
        Ok(self.rebased(pick))
    }

    /// Relabels `p_s` as `p₀`.
    pub fn rebased(&self, s: i64) -> Self {
        let mut out = self.clone();
        out.base = self.vertex(s);
        out.direction = self.edge_direction(s);
        out.window_start -= s;
        out.base_index += s;
        out
    }
}

/// Unit vector at angle `phi`, exact on the coordinate axes.
fn unit_at(phi: f64) -> V2 {
    let (mut s, mut c) = phi.sin_cos();
    let eps = 4.0 * f64::EPSILON;
    if s.abs() < eps {
        s = 0.0;
        c = c.signum();
    } else if c.abs() < eps {
        c = 0.0;
        s = s.signum();
    }
    V2::new(c, s)
}

pub fn classify_domain(spec: &UnboundedDomainSpec) -> Result<DomainClass, DomainError> {
    let tol = spec.tol_geom;
    for (k, &angle) in spec.window.iter().enumerate() {
        if angle < 0.0 {
            return Err(DomainError::NegativeTurning { index: spec.window_start + k as i64, angle });
        }
    }
    let total = spec.total_turning();
    if total > PI + tol {
        return Err(DomainError::TurningExceedsPi(total));
    }
    if total <= tol {
        return Ok(DomainClass::HalfPlaneDegenerate);
    }
    let infinite_tail = match spec.tail {
        AngleTail::Zero => false,
        AngleTail::Geometric { ratio } => {
            ratio > 0.0 && (spec.window[0] > 0.0 || spec.window[spec.window.len() - 1] > 0.0)
        }
    };
    if !infinite_tail {
        let positive: Vec<i64> = (spec.window_start..spec.window_end())
            .filter(|&i| spec.theta(i) > tol)
            .collect();
        if positive.len() == 2
            && positive[1] - positive[0] == 1
            && (spec.theta(positive[0]) + spec.theta(positive[1]) - PI).abs() <= tol
        {
            return Ok(DomainClass::InfiniteSpecial);
        }
    }
    if (total - PI).abs() <= tol {
        return Ok(DomainClass::Strip);
    }
    Ok(DomainClass::General)
}

/// `Ω_n`: the polygon `p₋ₙ … pₙ` closed by its point reflection through the
/// midpoint of `[p₋ₙ, pₙ]`, listed from `p₀` so marks keep their parity.
pub fn build_exhaustion_domain(spec: &UnboundedDomainSpec, n: usize) -> Result<MarkedPolygon, DomainError> {
    let class = classify_domain(spec)?;
    if class != DomainClass::General {
        return Err(DomainError::NotGeneral(class));
    }
    if n == 0 {
        return Err(DomainError::InvalidGenerator("n must be positive".into()));
    }
    if spec.theta(0) <= spec.tol_geom {
        return Err(DomainError::FlatBase);
    }
    let ni = n as i64;
    let chain: Vec<P2> = (-ni..=ni).map(|i| spec.vertex(i)).collect();
    let first = chain[0];
    let last = chain[2 * n];
    let sigma = |p: P2| P2::from(first.coords + last.coords - p.coords);

    let mut verts = Vec::with_capacity(4 * n);
    verts.extend_from_slice(&chain[n..]);
    verts.extend(chain[1..2 * n].iter().map(|&p| sigma(p)));
    verts.extend_from_slice(&chain[..n]);
    debug_assert_eq!(verts.len(), 4 * n);

    // accumulated rounding over 2n steps
    let tol = spec.tol_geom.max(1e-12 * (1 + n) as f64);
    let poly = MarkedPolygon::new(verts, tol)?;
    let verdict = chord_criterion(&poly);
    if let Some(chord) = verdict.witness {
        return Err(DomainError::SpecialExhaustion { n, chord });
    }
    Ok(poly)
}
