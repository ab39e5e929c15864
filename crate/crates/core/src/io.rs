//! Domain specification files, OBJ/PLY export of tower meshes, the JSON
//! sidecar and a plain-text dump of discrete solutions.
//!
//! Spec files are JSON. A bounded polygon is
//! `{"vertices": [[x, y], ...], "tol_geom": 1e-9}` (counterclockwise, edge
//! `i` marked `+∞` for even `i`; `tol_geom` optional). An unbounded domain is
//!
//! ```json
//! {"base_vertex": [0, 0], "initial_direction": [1, 0],
//!  "angles": {"window": [1.5707963267948966], "window_start": 0,
//!             "tail": {"kind": "zero"}},
//!  "tol_geom": 1e-9}
//! ```
//!
//! with `tail` either `{"kind": "zero"}` or
//! `{"kind": "geometric", "params": {"ratio": 0.5}}`. `window[k]` is the
//! turning angle at `p_{window_start + k}`.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conjugation::ConjugateSolution;
use crate::domain::{AngleTail, DomainError, MarkedPolygon, UnboundedDomainSpec, DEFAULT_TOL_GEOM};
use crate::geometry::{P2, V2};
use crate::mesh::NodeKind;
use crate::solver::GraphSolution;
use crate::tower::{Provenance, TowerMesh};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: String, source: std::io::Error },
    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum TailSpec {
    Zero,
    Geometric { ratio: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnglesSpec {
    pub window: Vec<f64>,
    #[serde(default)]
    pub window_start: i64,
    pub tail: TailSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DomainSpecFile {
    Bounded {
        vertices: Vec<[f64; 2]>,
        #[serde(default = "default_tol")]
        tol_geom: f64,
    },
    Unbounded {
        base_vertex: [f64; 2],
        initial_direction: [f64; 2],
        angles: AnglesSpec,
        #[serde(default = "default_tol")]
        tol_geom: f64,
    },
}

fn default_tol() -> f64 {
    DEFAULT_TOL_GEOM
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParsedDomain {
    Bounded(MarkedPolygon),
    Unbounded(UnboundedDomainSpec),
}

impl DomainSpecFile {
    pub fn validate(&self) -> Result<ParsedDomain, DomainError> {
        match self {
            DomainSpecFile::Bounded { vertices, tol_geom } => {
                let pts = vertices.iter().map(|v| P2::new(v[0], v[1])).collect();
                Ok(ParsedDomain::Bounded(MarkedPolygon::new(pts, *tol_geom)?))
            }
            DomainSpecFile::Unbounded { base_vertex, initial_direction, angles, tol_geom } => {
                let tail = match angles.tail {
                    TailSpec::Zero => AngleTail::Zero,
                    TailSpec::Geometric { ratio } => AngleTail::Geometric { ratio },
                };
                Ok(ParsedDomain::Unbounded(UnboundedDomainSpec::new(
                    P2::new(base_vertex[0], base_vertex[1]),
                    V2::new(initial_direction[0], initial_direction[1]),
                    angles.window_start,
                    angles.window.clone(),
                    tail,
                    *tol_geom,
                )?))
            }
        }
    }
}

impl From<&ParsedDomain> for DomainSpecFile {
    fn from(d: &ParsedDomain) -> Self {
        match d {
            ParsedDomain::Bounded(p) => DomainSpecFile::Bounded {
                vertices: p.vertices().iter().map(|v| [v.x, v.y]).collect(),
                tol_geom: p.tol_geom(),
            },
            ParsedDomain::Unbounded(s) => DomainSpecFile::Unbounded {
                base_vertex: [s.base().x, s.base().y],
                initial_direction: [s.initial_direction().x, s.initial_direction().y],
                angles: AnglesSpec {
                    window: s.window().to_vec(),
                    window_start: s.window_start(),
                    tail: match s.tail() {
                        AngleTail::Zero => TailSpec::Zero,
                        AngleTail::Geometric { ratio } => TailSpec::Geometric { ratio },
                    },
                },
                tol_geom: s.tol_geom(),
            },
        }
    }
}

pub fn parse_domain_str(text: &str) -> Result<ParsedDomain, IoError> {
    let file: DomainSpecFile = serde_json::from_str(text)?;
    Ok(file.validate()?)
}

pub fn parse_domain_spec(path: impl AsRef<Path>) -> Result<ParsedDomain, IoError> {
    parse_domain_str(&read(path.as_ref())?)
}

pub fn domain_to_string(domain: &ParsedDomain) -> String {
    serde_json::to_string_pretty(&DomainSpecFile::from(domain)).expect("spec serializes")
}

fn read(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::File { path: path.display().to_string(), source })
}

pub fn write_file(path: impl AsRef<Path>, contents: &str) -> Result<(), IoError> {
    let path = path.as_ref();
    std::fs::write(path, contents).map_err(|source| IoError::File { path: path.display().to_string(), source })
}

/// Vertices and triangles of a triangle mesh read back from a file.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleSoup {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
}

/// Wavefront OBJ with shortest round-trip decimal coordinates.
pub fn to_obj(mesh: &TowerMesh) -> String {
    let mut s = String::with_capacity(40 * (mesh.vertices.len() + mesh.triangles.len()));
    let _ = writeln!(s, "# saddle tower, {} slab(s), period 0 0 2", mesh.copies);
    for v in &mesh.vertices {
        let _ = writeln!(s, "v {} {} {}", v[0], v[1], v[2]);
    }
    for t in &mesh.triangles {
        let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    s
}

/// Reads `v` and triangular `f` records of an OBJ file. Face entries may
/// carry `/vt/vn` suffixes, which are ignored.
pub fn parse_obj(text: &str) -> Result<TriangleSoup, IoError> {
    let mut soup = TriangleSoup { vertices: Vec::new(), triangles: Vec::new() };
    for (k, line) in text.lines().enumerate() {
        let err = |msg: String| IoError::Parse { line: k + 1, msg };
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let c: Vec<f64> = it
                    .map(|t| t.parse::<f64>().map_err(|e| err(format!("{t}: {e}"))))
                    .collect::<Result<_, _>>()?;
                if c.len() < 3 {
                    return Err(err("vertex needs three coordinates".into()));
                }
                soup.vertices.push([c[0], c[1], c[2]]);
            }
            Some("f") => {
                let idx: Vec<usize> = it
                    .map(|t| {
                        let head = t.split('/').next().unwrap_or(t);
                        match head.parse::<usize>() {
                            Ok(i) if i >= 1 => Ok(i - 1),
                            _ => Err(err(format!("bad face index {t}"))),
                        }
                    })
                    .collect::<Result<_, _>>()?;
                if idx.len() != 3 {
                    return Err(err(format!("face has {} vertices, expected 3", idx.len())));
                }
                soup.triangles.push([idx[0], idx[1], idx[2]]);
            }
            _ => {}
        }
    }
    if let Some(&bad) = soup.triangles.iter().flatten().find(|&&i| i >= soup.vertices.len()) {
        return Err(IoError::Parse { line: 0, msg: format!("face index {} out of range", bad + 1) });
    }
    Ok(soup)
}

/// ASCII PLY.
pub fn to_ply(mesh: &TowerMesh) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "ply\nformat ascii 1.0\ncomment saddle tower, period 0 0 2\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\nelement face {}\nproperty list uchar int vertex_indices\nend_header\n",
        mesh.vertices.len(),
        mesh.triangles.len()
    );
    for v in &mesh.vertices {
        let _ = writeln!(s, "{} {} {}", v[0], v[1], v[2]);
    }
    for t in &mesh.triangles {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    s
}

/// Reads an ASCII PLY with triangle faces, as written by [`to_ply`].
pub fn parse_ply(text: &str) -> Result<TriangleSoup, IoError> {
    let mut lines = text.lines().enumerate();
    let (mut nv, mut nf) = (None, None);
    let mut header_ok = false;
    for (k, line) in lines.by_ref() {
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["format", f, ..] if *f != "ascii" => {
                return Err(IoError::Parse { line: k + 1, msg: format!("unsupported format {f}") })
            }
            ["element", "vertex", n] => nv = n.parse::<usize>().ok(),
            ["element", "face", n] => nf = n.parse::<usize>().ok(),
            ["end_header"] => {
                header_ok = true;
                break;
            }
            _ => {}
        }
    }
    let (Some(nv), Some(nf), true) = (nv, nf, header_ok) else {
        return Err(IoError::Parse { line: 0, msg: "incomplete PLY header".into() });
    };
    let mut soup = TriangleSoup { vertices: Vec::with_capacity(nv), triangles: Vec::with_capacity(nf) };
    for (k, line) in lines {
        let err = |msg: String| IoError::Parse { line: k + 1, msg };
        let words: Vec<&str> = line.split_whitespace().collect();
        if words.is_empty() {
            continue;
        }
        if soup.vertices.len() < nv {
            let c: Vec<f64> = words.iter().map(|t| t.parse::<f64>().map_err(|e| err(format!("{t}: {e}")))).collect::<Result<_, _>>()?;
            if c.len() < 3 {
                return Err(err("vertex needs three coordinates".into()));
            }
            soup.vertices.push([c[0], c[1], c[2]]);
        } else if soup.triangles.len() < nf {
            let c: Vec<usize> = words.iter().map(|t| t.parse::<usize>().map_err(|e| err(format!("{t}: {e}")))).collect::<Result<_, _>>()?;
            if c.len() != 4 || c[0] != 3 || c[1..].iter().any(|&i| i >= nv) {
                return Err(err("expected a triangle face with valid indices".into()));
            }
            soup.triangles.push([c[1], c[2], c[3]]);
        }
    }
    if soup.vertices.len() != nv || soup.triangles.len() != nf {
        return Err(IoError::Parse { line: 0, msg: "PLY body shorter than its header".into() });
    }
    Ok(soup)
}

/// Metadata written next to an exported tower mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TowerSidecar {
    pub period: [f64; 3],
    pub symmetry_planes: Vec<i64>,
    pub copies: usize,
    pub vertices: usize,
    pub triangles: usize,
    pub welded: usize,
    pub ends: usize,
    pub provenance: Provenance,
}

impl From<&TowerMesh> for TowerSidecar {
    fn from(m: &TowerMesh) -> Self {
        Self {
            period: m.period,
            symmetry_planes: m.planes.clone(),
            copies: m.copies,
            vertices: m.vertices.len(),
            triangles: m.triangles.len(),
            welded: m.welded,
            ends: m.ends,
            provenance: m.provenance.clone(),
        }
    }
}

pub fn sidecar_json(mesh: &TowerMesh) -> String {
    serde_json::to_string_pretty(&TowerSidecar::from(mesh)).expect("sidecar serializes")
}

/// Plain-text dump of a solution: a header, one row per node
/// (`x y kind u`, plus `X*₁ X*₂ ψ` when a conjugate is given), then one row
/// per triangle (`i j k`, 0-based). `kind` is `interior`, `vertex:<i>` or
/// `edge:<i>`.
pub fn dump_solution(sol: &GraphSolution, conj: Option<&ConjugateSolution>) -> String {
    let mesh = sol.mesh();
    let mut s = String::new();
    let _ = writeln!(s, "# saddle-tower dump v1");
    let _ = writeln!(
        s,
        "# h {} truncation {} polygon_vertices {}",
        mesh.h(),
        sol.truncation().map_or("none".to_string(), |m| m.to_string()),
        mesh.polygon().len()
    );
    let _ = writeln!(s, "nodes {} columns {}", mesh.num_nodes(), if conj.is_some() { "x y kind u X1 X2 psi" } else { "x y kind u" });
    for v in 0..mesh.num_nodes() {
        let p = mesh.point(v);
        let kind = match mesh.kind(v) {
            NodeKind::Interior => "interior".to_string(),
            NodeKind::Vertex(i) => format!("vertex:{i}"),
            NodeKind::Edge(i) => format!("edge:{i}"),
        };
        let _ = write!(s, "{} {} {} {}", p.x, p.y, kind, sol.value(v));
        if let Some(c) = conj {
            let x = c.position(v);
            let _ = write!(s, " {} {} {}", x[0], x[1], x[2]);
        }
        s.push('\n');
    }
    let _ = writeln!(s, "triangles {}", mesh.num_triangles());
    for t in mesh.triangles() {
        let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
    }
    s
}

/// Node and triangle tables of a dump.
#[derive(Debug, Clone, PartialEq)]
pub struct Dump {
    pub points: Vec<[f64; 2]>,
    pub kinds: Vec<NodeKind>,
    pub u: Vec<f64>,
    pub conjugate: Option<Vec<[f64; 3]>>,
    pub triangles: Vec<[usize; 3]>,
}

pub fn parse_dump(text: &str) -> Result<Dump, IoError> {
    let lines: Vec<(usize, &str)> =
        text.lines().enumerate().filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty()).collect();
    let perr = |line: usize, msg: &str| IoError::Parse { line: line + 1, msg: msg.to_string() };
    let (k0, head) = *lines.first().ok_or_else(|| perr(0, "empty dump"))?;
    let words: Vec<&str> = head.split_whitespace().collect();
    if words.len() < 3 || words[0] != "nodes" || words[2] != "columns" {
        return Err(perr(k0, "expected a nodes header"));
    }
    let n: usize = words[1].parse().map_err(|_| perr(k0, "bad node count"))?;
    let with_conj = words.len() == 10;
    let mut out = Dump {
        points: Vec::with_capacity(n),
        kinds: Vec::with_capacity(n),
        u: Vec::with_capacity(n),
        conjugate: with_conj.then(Vec::new),
        triangles: Vec::new(),
    };
    let num = |k: usize, t: &str| t.parse::<f64>().map_err(|_| perr(k, "bad number"));
    for &(k, line) in lines.iter().skip(1).take(n) {
        let w: Vec<&str> = line.split_whitespace().collect();
        if w.len() != if with_conj { 7 } else { 4 } {
            return Err(perr(k, "wrong column count"));
        }
        out.points.push([num(k, w[0])?, num(k, w[1])?]);
        let index = |t: &str| t.parse::<usize>().map_err(|_| perr(k, "bad kind index"));
        out.kinds.push(match w[2].split_once(':') {
            None if w[2] == "interior" => NodeKind::Interior,
            Some(("vertex", i)) => NodeKind::Vertex(index(i)?),
            Some(("edge", i)) => NodeKind::Edge(index(i)?),
            _ => return Err(perr(k, "bad node kind")),
        });
        out.u.push(num(k, w[3])?);
        if let Some(c) = out.conjugate.as_mut() {
            c.push([num(k, w[4])?, num(k, w[5])?, num(k, w[6])?]);
        }
    }
    let rest = lines.get(n + 1).ok_or_else(|| perr(0, "missing triangles header"))?;
    let w: Vec<&str> = rest.1.split_whitespace().collect();
    if w.len() != 2 || w[0] != "triangles" {
        return Err(perr(rest.0, "expected a triangles header"));
    }
    let nt: usize = w[1].parse().map_err(|_| perr(rest.0, "bad triangle count"))?;
    for &(k, line) in lines.iter().skip(n + 2).take(nt) {
        let idx: Vec<usize> = line.split_whitespace().map(|t| t.parse::<usize>().map_err(|_| perr(k, "bad index"))).collect::<Result<_, _>>()?;
        if idx.len() != 3 || idx.iter().any(|&i| i >= n) {
            return Err(perr(k, "bad triangle"));
        }
        out.triangles.push([idx[0], idx[1], idx[2]]);
    }
    if out.points.len() != n || out.triangles.len() != nt {
        return Err(perr(0, "dump shorter than its headers"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_round_trips() {
        let d = parse_domain_str(r#"{"vertices": [[0,0],[1,0],[1,1],[0,1]]}"#).unwrap();
        assert_eq!(d, ParsedDomain::Bounded(MarkedPolygon::unit_square()));
        assert_eq!(parse_domain_str(&domain_to_string(&d)).unwrap(), d);
    }

    #[test]
    fn unbounded_round_trips() {
        let text = r#"{"base_vertex": [0, 0], "initial_direction": [1, 0],
            "angles": {"window": [0.7853981633974483], "tail": {"kind": "geometric", "params": {"ratio": 0.5}}},
            "tol_geom": 1e-9}"#;
        let d = parse_domain_str(text).unwrap();
        let ParsedDomain::Unbounded(spec) = &d else { panic!("expected unbounded") };
        assert_eq!(*spec, UnboundedDomainSpec::geometric(std::f64::consts::FRAC_PI_4, 0.5).unwrap());
        assert_eq!(parse_domain_str(&domain_to_string(&d)).unwrap(), d);
        let zero = r#"{"base_vertex": [0, 0], "initial_direction": [1, 0],
            "angles": {"window": [1.5707963267948966], "tail": {"kind": "zero"}}}"#;
        assert_eq!(parse_domain_str(zero).unwrap(), ParsedDomain::Unbounded(UnboundedDomainSpec::right_angle()));
    }

    #[test]
    fn refusals_name_the_invariant() {
        let five = r#"{"vertices": [[0,0],[1,0],[1.309,0.951],[0.5,1.539],[-0.309,0.951]]}"#;
        let err = parse_domain_str(five).unwrap_err().to_string();
        assert!(err.contains("even vertex count required"), "{err}");
        assert!(matches!(parse_domain_str("{\"vertices\": 3}"), Err(IoError::Json(_))));
    }

    #[test]
    fn obj_rejects_bad_faces() {
        assert!(parse_obj("v 0 0 0\nv 1 0 0\nf 1 2 3\n").is_err());
        assert!(parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3 1\n").is_err());
        let soup = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1 2/2 3/3\n").unwrap();
        assert_eq!(soup.triangles, vec![[0, 1, 2]]);
    }

    #[test]
    fn ply_needs_header() {
        assert!(parse_ply("ply\nformat ascii 1.0\n0 0 0\n").is_err());
    }
}
