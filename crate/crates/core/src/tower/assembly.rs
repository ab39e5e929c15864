//! Reflection of the conjugate piece across the planes `x₃ = 1, 2, …`.
//!
//! Heights are rounded to multiples of `2⁻⁴⁰`, so the slab maps
//! `x₃ ↦ j + x₃` and `x₃ ↦ (j + 1) − x₃` are exact in floating point and the
//! symmetries of the assembled mesh hold bit for bit.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::TowerError;
use crate::conjugation::ConjugateSolution;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TowerOptions {
    /// Allowed excursion of `ψ` outside `[0, 1]`, and of `ψ(p_i)` from the
    /// parity of `i`, before clamping.
    pub height_tol: f64,
    /// Vertices within this distance of a plane are shared by both slabs.
    pub weld_tol: f64,
}

impl Default for TowerOptions {
    fn default() -> Self {
        Self { height_tol: 2e-2, weld_tol: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub spec: Option<String>,
    pub n: Option<usize>,
    pub h: f64,
    pub m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TowerMesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
    pub period: [f64; 3],
    /// Heights of the symmetry planes.
    pub planes: Vec<i64>,
    pub copies: usize,
    /// Vertex count of the fundamental piece.
    pub piece_vertices: usize,
    /// Vertices shared between neighbouring slabs.
    pub welded: usize,
    /// Boundary arcs of the piece between consecutive polygon vertices.
    pub ends: usize,
    pub provenance: Provenance,
}

/// Mismatch counts of the symmetry checks; zero means exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SymmetryReport {
    pub reflection_vertices: usize,
    pub reflection_triangles: usize,
    pub period_vertices: usize,
    pub period_triangles: usize,
    /// Number of (vertex or triangle) images checked.
    pub checked: usize,
}

impl SymmetryReport {
    pub fn is_exact(&self) -> bool {
        self.reflection_vertices == 0
            && self.reflection_triangles == 0
            && self.period_vertices == 0
            && self.period_triangles == 0
    }
}

const QUANTUM: f64 = (1u64 << 40) as f64;

fn quantize(z: f64) -> f64 {
    (z * QUANTUM).round() / QUANTUM
}

type Key = [u64; 3];

fn key(p: [f64; 3]) -> Key {
    // `+ 0.0` folds −0 into +0.
    [(p[0] + 0.0).to_bits(), (p[1] + 0.0).to_bits(), (p[2] + 0.0).to_bits()]
}

pub fn build_tower(conj: &ConjugateSolution, copies: usize) -> Result<TowerMesh, TowerError> {
    build_tower_with(conj, copies, &TowerOptions::default())
}

pub fn build_tower_with(conj: &ConjugateSolution, copies: usize, opts: &TowerOptions) -> Result<TowerMesh, TowerError> {
    if copies == 0 {
        return Err(TowerError::InvalidOption("copies must be positive".into()));
    }
    if !(opts.height_tol >= 0.0 && opts.weld_tol >= 0.0) {
        return Err(TowerError::InvalidOption("tolerances must be nonnegative".into()));
    }
    let krust = conj.krust();
    if !krust.passes {
        return Err(TowerError::NotGraph(Box::new(krust)));
    }
    let (min, max) = (conj.psi().min(), conj.psi().max());
    if min < -opts.height_tol || max > 1.0 + opts.height_tol {
        return Err(TowerError::PsiBounds { min, max, tol: opts.height_tol });
    }
    let mesh = conj.mesh();
    let mut piece: Vec<[f64; 3]> =
        conj.positions().iter().map(|p| [p[0], p[1], quantize(p[2].clamp(0.0, 1.0))]).collect();
    let poly = mesh.polygon();
    for i in 0..poly.len() {
        let v = mesh.vertex_node(i);
        let expected = (i % 2) as f64;
        let height = conj.position(v)[2];
        if (height - expected).abs() > opts.height_tol {
            return Err(TowerError::WeldMismatch { vertex: i, height, expected });
        }
        piece[v][2] = expected;
    }

    let on_plane = |v: usize, level: f64| (piece[v][2] - level).abs() <= opts.weld_tol;
    let mut vertices = Vec::with_capacity(copies * piece.len());
    let mut triangles = Vec::with_capacity(copies * mesh.num_triangles());
    let mut prev: Vec<usize> = Vec::new();
    let mut welded = 0;
    for j in 0..copies {
        let even = j % 2 == 0;
        // The plane shared with slab j − 1 sits at piece height 0 for even j.
        let shared = if even { 0.0 } else { 1.0 };
        let mut idx = Vec::with_capacity(piece.len());
        for (v, p) in piece.iter().enumerate() {
            if j > 0 && on_plane(v, shared) {
                idx.push(prev[v]);
                welded += 1;
                continue;
            }
            let z = if even { j as f64 + p[2] } else { (j + 1) as f64 - p[2] };
            idx.push(vertices.len());
            vertices.push([p[0], p[1], z]);
        }
        for t in mesh.triangles() {
            let [a, b, c] = t.map(|v| idx[v]);
            triangles.push(if even { [a, b, c] } else { [a, c, b] });
        }
        prev = idx;
    }
    Ok(TowerMesh {
        vertices,
        triangles,
        period: [0.0, 0.0, 2.0],
        planes: (0..=copies as i64).collect(),
        copies,
        piece_vertices: piece.len(),
        welded,
        ends: count_ends(conj),
        provenance: Provenance { spec: None, n: Some(poly.len() / 4), h: mesh.h(), m: conj.truncation() },
    })
}

/// Boundary mesh edges grouped by polygon edge; each nonempty group is one
/// end of the piece.
fn count_ends(conj: &ConjugateSolution) -> usize {
    let mesh = conj.mesh();
    let mut edges: HashSet<usize> = HashSet::new();
    for b in mesh.boundary_edges() {
        edges.insert(b.polygon_edge);
    }
    edges.len()
}

impl TowerMesh {
    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// Height range `[0, copies]`.
    pub fn height(&self) -> f64 {
        self.copies as f64
    }

    /// Checks bit for bit that reflection across every plane and translation
    /// by the period map vertices and triangles of the mesh onto vertices and
    /// triangles of the mesh, wherever the image stays in the height range.
    pub fn symmetry_report(&self) -> SymmetryReport {
        let index: HashMap<Key, usize> = self.vertices.iter().enumerate().map(|(i, &p)| (key(p), i)).collect();
        let tri_keys: HashSet<[Key; 3]> = self.triangles.iter().map(|t| self.tri_key(t, |p| p)).collect();
        let top = self.height();
        let mut report = SymmetryReport {
            reflection_vertices: 0,
            reflection_triangles: 0,
            period_vertices: 0,
            period_triangles: 0,
            checked: 0,
        };
        let mut maps: Vec<(bool, Box<dyn Fn([f64; 3]) -> [f64; 3]>)> = Vec::new();
        for &k in &self.planes {
            let c = 2.0 * k as f64;
            maps.push((true, Box::new(move |p: [f64; 3]| [p[0], p[1], c - p[2]])));
        }
        let t = self.period;
        maps.push((false, Box::new(move |p: [f64; 3]| [p[0] + t[0], p[1] + t[1], p[2] + t[2]])));
        for (reflection, f) in &maps {
            let inside = |p: [f64; 3]| (0.0..=top).contains(&p[2]);
            for &p in &self.vertices {
                let q = f(p);
                if !inside(q) {
                    continue;
                }
                report.checked += 1;
                if !index.contains_key(&key(q)) {
                    if *reflection {
                        report.reflection_vertices += 1;
                    } else {
                        report.period_vertices += 1;
                    }
                }
            }
            for tri in &self.triangles {
                if !tri.iter().all(|&v| inside(f(self.vertices[v]))) {
                    continue;
                }
                report.checked += 1;
                if !tri_keys.contains(&self.tri_key(tri, f)) {
                    if *reflection {
                        report.reflection_triangles += 1;
                    } else {
                        report.period_triangles += 1;
                    }
                }
            }
        }
        report
    }

    fn tri_key(&self, t: &[usize; 3], f: impl Fn([f64; 3]) -> [f64; 3]) -> [Key; 3] {
        let mut k = t.map(|v| key(f(self.vertices[v])));
        k.sort_unstable();
        k
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantized_heights_reflect_exactly() {
        for &z in &[0.0, 1e-13, 0.1, 0.33333333333, 0.999999, 1.0] {
            let q = quantize(z);
            assert!((q - z).abs() <= 0.5 / QUANTUM);
            for j in 0..8 {
                let up = j as f64 + q;
                let mirrored = (j + 2) as f64 - q;
                assert_eq!((2.0 * (j + 1) as f64 - up).to_bits(), mirrored.to_bits());
                assert_eq!((up + 2.0).to_bits(), ((j + 2) as f64 + q).to_bits());
            }
        }
    }

    #[test]
    fn negative_zero_has_one_key() {
        assert_eq!(key([-0.0, 0.0, -0.0]), key([0.0, 0.0, 0.0]));
    }

    #[test]
    fn symmetry_report_sees_a_broken_copy() {
        let mut mesh = TowerMesh {
            vertices: vec![[0.0, 0.0, 0.25], [1.0, 0.0, 0.5], [0.0, 1.0, 0.75], [0.0, 0.0, 1.75], [1.0, 0.0, 1.5], [0.0, 1.0, 1.25]],
            triangles: vec![[0, 1, 2], [3, 5, 4]],
            period: [0.0, 0.0, 2.0],
            planes: vec![0, 1, 2],
            copies: 2,
            piece_vertices: 3,
            welded: 0,
            ends: 0,
            provenance: Provenance::default(),
        };
        assert!(mesh.symmetry_report().is_exact());
        mesh.vertices[4][2] = 1.5 + f64::EPSILON;
        let r = mesh.symmetry_report();
        assert!(r.reflection_vertices > 0 && r.reflection_triangles > 0);
    }
}
