//! Command-line pipeline: `validate`, `solve`, `conjugate`, `tower` and
//! `asympt` on a JSON domain spec, writing `report.json`, `timings.json` and
//! the mesh artifacts into the output directory.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::Serialize;
use serde_json::{json, Map, Value};
use thiserror::Error;

use saddle_tower::conjugation::{conjugate, polygon_edge_flux, ConjugateOptions, ConjugateSolution, ConjugationError};
use saddle_tower::domain::{
    build_exhaustion_domain, chord_criterion, classify_domain, inner_radius, is_special_bounded,
    jenkins_serrin_bruteforce, DomainClass, MarkedPolygon, UnboundedDomainSpec,
};
use saddle_tower::geometry::P2;
use saddle_tower::io::{self, IoError, ParsedDomain};
use saddle_tower::solver::{solve_jenkins_serrin, GraphSolution, JsOptions, SolverError};
use saddle_tower::tower::{
    asymptotic_frame_vertex, build_tower, curvature_estimate, deviation_at, scherk_reference, solve_limit,
    EndSign, LimitOptions, LimitRun, Provenance, TowerError, TowerMesh, Window,
};

/// Log filter variable (`error`, `warn`, `info`, `debug`).
pub const LOG_ENV: &str = "SADDLE_TOWER_LOG";

pub mod exit {
    pub const OK: u8 = 0;
    pub const IO: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const INVALID_DOMAIN: u8 = 3;
    pub const SPECIAL_DOMAIN: u8 = 10;
    pub const DIVERGENCE: u8 = 11;
    pub const NOT_A_GRAPH: u8 = 12;
    pub const NON_CONVERGENCE: u8 = 13;
    pub const UNSUPPORTED: u8 = 14;
}

const EXIT_TABLE: &str = "\
Exit codes:
   0  success
   1  file could not be read or written
   2  usage error (bad flag value, wrong domain kind for the command)
   3  invalid domain (odd vertex count, non-unit edge, non-convex, malformed)
  10  special domain: the chord criterion fails (witness chord in the report)
  11  divergence line detected or suspected
  12  conjugate piece is not a graph (Krust check) or metric inconsistency
  13  non-convergence (Newton, exhaustion differences, conjugate range)
  14  unsupported domain class (strip, half-plane, infinite special)

Set SADDLE_TOWER_LOG=info for progress messages on stderr.";

#[derive(Debug, Parser)]
#[command(name = "saddle-tower", version, about = "Jenkins-Serrin graphs, conjugate pieces and saddle towers", after_help = EXIT_TABLE)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandLine,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Subcommand)]
pub enum CommandLine {
    /// Domain verdicts: convexity, special domain, chord and brute-force criteria.
    Validate { spec: PathBuf },
    /// Jenkins-Serrin solve on a bounded polygon.
    Solve { spec: PathBuf },
    /// Solve, then the conjugate function, edge fluxes and the Krust check.
    Conjugate { spec: PathBuf },
    /// Full pipeline to the tower mesh (OBJ, PLY and JSON sidecar).
    Tower { spec: PathBuf },
    /// Deviation from the Scherk model along the +infinity end.
    Asympt { spec: PathBuf },
}

#[derive(Debug, Args)]
pub struct Flags {
    /// Target mesh size.
    #[arg(long = "h", global = true, default_value_t = 1.0 / 32.0)]
    pub h: f64,
    /// Truncation levels, comma separated and increasing.
    #[arg(long, global = true, default_value = "2,4,8,16")]
    pub m_schedule: String,
    /// Largest exhaustion index for unbounded specs.
    #[arg(long, global = true, default_value_t = 4)]
    pub n_max: usize,
    /// Smallest exhaustion index in the asymptotic deviation sequence.
    #[arg(long, global = true, default_value_t = 3)]
    pub n_min: usize,
    /// Number of slabs in the tower.
    #[arg(long, global = true, default_value_t = 2)]
    pub copies: usize,
    /// Comparison window x0,x1,y0,y1 in the normalized frame.
    #[arg(long, global = true, default_value = "0.2,0.8,0.5,1.5")]
    pub window: String,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Stabilization tolerance of the truncation schedule.
    #[arg(long, global = true, default_value_t = 1e-3)]
    pub tol_js: f64,
    /// Normalization point x,y (default: centroid of the polygon or of Ω₁).
    #[arg(long, global = true)]
    pub q: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Validate,
    Solve,
    Conjugate,
    Tower,
    Asympt,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub spec: PathBuf,
    pub h: f64,
    pub m_schedule: Vec<f64>,
    pub n_max: usize,
    pub n_min: usize,
    pub copies: usize,
    pub window: Window,
    pub out: PathBuf,
    pub tol_js: f64,
    pub q: Option<[f64; 2]>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] IoError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Io(_) => exit::IO,
        }
    }
}

fn parse_list(flag: &str, s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("--{flag}: cannot parse {t:?}"))))
        .collect()
}

impl Cli {
    pub fn into_config(self) -> Result<RunConfig, CliError> {
        let (command, spec) = match self.command {
            CommandLine::Validate { spec } => (CommandKind::Validate, spec),
            CommandLine::Solve { spec } => (CommandKind::Solve, spec),
            CommandLine::Conjugate { spec } => (CommandKind::Conjugate, spec),
            CommandLine::Tower { spec } => (CommandKind::Tower, spec),
            CommandLine::Asympt { spec } => (CommandKind::Asympt, spec),
        };
        let f = self.flags;
        let w = parse_list("window", &f.window)?;
        if w.len() != 4 {
            return Err(CliError::Usage("--window needs four values x0,x1,y0,y1".into()));
        }
        let window = Window::new([w[0], w[1]], [w[2], w[3]]).map_err(|e| CliError::Usage(e.to_string()))?;
        let q = match f.q {
            None => None,
            Some(s) => {
                let v = parse_list("q", &s)?;
                if v.len() != 2 {
                    return Err(CliError::Usage("--q needs two values x,y".into()));
                }
                Some([v[0], v[1]])
            }
        };
        let config = RunConfig {
            command,
            spec,
            h: f.h,
            m_schedule: parse_list("m-schedule", &f.m_schedule)?,
            n_max: f.n_max,
            n_min: f.n_min,
            copies: f.copies,
            window,
            out: f.out,
            tol_js: f.tol_js,
            q,
        };
        config.validate()?;
        Ok(config)
    }
}

impl RunConfig {
    pub fn new(command: CommandKind, spec: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        Self {
            command,
            spec: spec.into(),
            h: 1.0 / 32.0,
            m_schedule: vec![2.0, 4.0, 8.0, 16.0],
            n_max: 4,
            n_min: 3,
            copies: 2,
            window: Window::default(),
            out: out.into(),
            tol_js: 1e-3,
            q: None,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(CliError::Usage(format!("--h must be positive, got {}", self.h)));
        }
        if !(self.tol_js > 0.0) {
            return Err(CliError::Usage("--tol-js must be positive".into()));
        }
        if self.n_max == 0 || self.copies == 0 {
            return Err(CliError::Usage("--n-max and --copies must be at least 1".into()));
        }
        if self.m_schedule.len() < 2 || self.m_schedule.windows(2).any(|w| !(w[1] > w[0])) || self.m_schedule[0] <= 0.0 {
            return Err(CliError::Usage("--m-schedule needs at least two positive increasing values".into()));
        }
        Ok(())
    }

    fn js(&self) -> JsOptions {
        JsOptions { h: self.h, m_schedule: self.m_schedule.clone(), tol_js: self.tol_js, ..JsOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Refusal {
    pub code: u8,
    /// The criterion or invariant that failed.
    pub criterion: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: CommandKind,
    pub config: RunConfig,
    pub verdicts: Map<String, Value>,
    pub artifacts: Vec<String>,
    pub refusal: Option<Refusal>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub code: u8,
    pub report: RunReport,
    pub summary: String,
}

struct Run<'a> {
    config: &'a RunConfig,
    verdicts: Map<String, Value>,
    artifacts: Vec<String>,
    timings: Map<String, Value>,
    clock: Instant,
}

type Step<T> = Result<T, Refusal>;

fn refuse(code: u8, criterion: &str, message: impl ToString) -> Refusal {
    Refusal { code, criterion: criterion.into(), message: message.to_string() }
}

impl Run<'_> {
    fn put(&mut self, key: &str, value: impl Serialize) {
        self.verdicts.insert(key.into(), serde_json::to_value(value).expect("verdict serializes"));
    }

    fn lap(&mut self, stage: &str) {
        let t = self.clock.elapsed().as_secs_f64();
        self.timings.insert(stage.into(), json!(t));
        self.clock = Instant::now();
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.config.out.join(name);
        io::write_file(&path, contents)?;
        self.artifacts.push(path.display().to_string());
        Ok(())
    }
}

fn solver_refusal(e: &SolverError) -> Refusal {
    match e {
        SolverError::ChordCriterion { .. } => refuse(exit::SPECIAL_DOMAIN, "chord criterion", e),
        SolverError::Divergence { .. } => refuse(exit::DIVERGENCE, "divergence line", e),
        SolverError::NotStabilized { report, .. } if !report.converges => {
            refuse(exit::DIVERGENCE, "divergence line", e)
        }
        SolverError::Domain(_) | SolverError::Mesh(_) | SolverError::BadNormalization(..) => {
            refuse(exit::INVALID_DOMAIN, "domain invariants", e)
        }
        _ => refuse(exit::NON_CONVERGENCE, "truncation schedule convergence", e),
    }
}

fn conjugation_refusal(e: &ConjugationError) -> Refusal {
    match e {
        ConjugationError::MetricInconsistency { .. } => refuse(exit::NOT_A_GRAPH, "conjugate metric consistency", e),
        _ => refuse(exit::NON_CONVERGENCE, "conjugate recovery", e),
    }
}

fn tower_refusal(e: &TowerError) -> Refusal {
    match e {
        TowerError::Solver { source, .. } => solver_refusal(source),
        TowerError::Conjugation(c) => conjugation_refusal(c),
        TowerError::UnsupportedClass(_) => refuse(exit::UNSUPPORTED, "domain class", e),
        TowerError::Domain(_) => refuse(exit::INVALID_DOMAIN, "domain invariants", e),
        TowerError::NotGraph(_) => refuse(exit::NOT_A_GRAPH, "Krust graph check", e),
        TowerError::InvalidOption(_) => refuse(exit::USAGE, "options", e),
        _ => refuse(exit::NON_CONVERGENCE, "conjugate piece in the slab", e),
    }
}

fn is_unit_square(poly: &MarkedPolygon) -> bool {
    let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    poly.len() == 4 && poly.vertices().iter().zip(sq).all(|(v, s)| (v.x - s[0]).abs() < 1e-12 && (v.y - s[1]).abs() < 1e-12)
}

/// Closed-form Jenkins-Serrin solution on the unit square with `+∞` on the
/// horizontal edges.
fn square_closed_form(p: P2) -> f64 {
    use std::f64::consts::PI;
    ((PI * (p.x - 0.5)).cos() / (PI * (p.y - 0.5)).cos()).ln() / PI
}

fn oracle_error(sol: &GraphSolution) -> f64 {
    let mesh = sol.mesh();
    let dist = mesh.boundary_distances();
    (0..mesh.num_nodes())
        .filter(|&v| dist[v] >= 0.1)
        .map(|v| (sol.value(v) - square_closed_form(mesh.point(v))).abs())
        .fold(0.0, f64::max)
}

fn bounded(domain: &ParsedDomain) -> Step<&MarkedPolygon> {
    match domain {
        ParsedDomain::Bounded(p) => Ok(p),
        ParsedDomain::Unbounded(_) => Err(refuse(exit::USAGE, "command input", "this command needs a bounded polygon")),
    }
}

fn unbounded(domain: &ParsedDomain) -> Step<&UnboundedDomainSpec> {
    match domain {
        ParsedDomain::Unbounded(s) => Ok(s),
        ParsedDomain::Bounded(_) => Err(refuse(exit::USAGE, "command input", "this command needs an unbounded spec")),
    }
}

fn q_point(config: &RunConfig, poly: &MarkedPolygon) -> P2 {
    config.q.map_or_else(|| poly.centroid(), |q| P2::new(q[0], q[1]))
}

fn validate_cmd(run: &mut Run, domain: &ParsedDomain) -> Step<String> {
    match domain {
        ParsedDomain::Bounded(poly) => {
            let chord = chord_criterion(poly);
            run.put("domain", "bounded");
            run.put("vertices", poly.len());
            run.put("strictly_convex", poly.is_strictly_convex());
            run.put("is_special_bounded", is_special_bounded(poly));
            run.put("chord_criterion", &chord);
            let brute = poly.is_strictly_convex().then(|| jenkins_serrin_bruteforce(poly).ok()).flatten();
            run.put("bruteforce", &brute);
            run.put("inner_radius", inner_radius(poly).ok());
            match chord.witness {
                Some(c) => Err(refuse(
                    exit::SPECIAL_DOMAIN,
                    "chord criterion (special domain)",
                    format!(
                        "witness chord ({}, {}) - ({}, {}) of length {}",
                        c.a[0], c.a[1], c.b[0], c.b[1], c.length
                    ),
                )),
                None => Ok(format!("valid: {}-gon satisfies the chord criterion", poly.len())),
            }
        }
        ParsedDomain::Unbounded(spec) => {
            let class = classify_domain(spec).map_err(|e| refuse(exit::INVALID_DOMAIN, "domain invariants", e))?;
            run.put("domain", "unbounded");
            run.put("class", class);
            run.put("total_turning", spec.total_turning());
            if class != DomainClass::General {
                return Err(refuse(exit::UNSUPPORTED, "domain class", format!("class {class:?} is out of scope")));
            }
            let a = spec.a_inf();
            let b = spec.a_neg_inf();
            run.put("a_inf", [a.x, a.y]);
            run.put("a_neg_inf", [b.x, b.y]);
            let omega1 = build_exhaustion_domain(spec, 1).map_err(|e| refuse(exit::SPECIAL_DOMAIN, "exhaustion domain", e))?;
            run.put("omega1_vertices", omega1.vertices().iter().map(|v| [v.x, v.y]).collect::<Vec<_>>());
            Ok("valid: general unbounded domain".into())
        }
    }
}

fn solve_bounded(run: &mut Run, poly: &MarkedPolygon) -> Step<GraphSolution> {
    let q = q_point(run.config, poly);
    let sol = solve_jenkins_serrin(poly, q, &run.config.js()).map_err(|e| solver_refusal(&e))?;
    run.lap("solve");
    run.put("q", [q.x, q.y]);
    run.put("nodes", sol.mesh().num_nodes());
    run.put("triangles", sol.mesh().num_triangles());
    run.put("truncation", sol.truncation());
    run.put("residual", sol.residual());
    run.put("divergence", "no divergence lines");
    if is_unit_square(poly) {
        run.put("oracle_sup_error", oracle_error(&sol));
    }
    Ok(sol)
}

fn conjugate_checked(run: &mut Run, sol: &GraphSolution) -> Step<ConjugateSolution> {
    let conj = conjugate(sol, &ConjugateOptions::default()).map_err(|e| conjugation_refusal(&e))?;
    run.lap("conjugate");
    let poly = sol.mesh().polygon();
    let fluxes = (0..poly.len())
        .map(|i| polygon_edge_flux(sol, conj.psi(), i))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| conjugation_refusal(&e))?;
    let vertex_psi: Vec<f64> = (0..poly.len()).map(|i| conj.psi().value(sol.mesh().vertex_node(i))).collect();
    let krust = conj.krust();
    run.put("edge_fluxes", &fluxes);
    run.put("vertex_psi", &vertex_psi);
    run.put("psi_range", [conj.psi().min(), conj.psi().max()]);
    run.put("psi_loop_residual", conj.psi().max_loop_residual);
    run.put("star_loop_residuals", conj.star_residuals());
    run.put("star_core_residuals", conj.core_residuals());
    run.put("krust", &krust);
    if !krust.passes {
        return Err(refuse(
            exit::NOT_A_GRAPH,
            "Krust graph check",
            format!("{} flipped triangles, {} overlapping samples", krust.flipped, krust.overlaps),
        ));
    }
    Ok(conj)
}

fn limit(run: &mut Run, spec: &UnboundedDomainSpec) -> Step<LimitRun> {
    let class = classify_domain(spec).map_err(|e| refuse(exit::INVALID_DOMAIN, "domain invariants", e))?;
    if class != DomainClass::General {
        return Err(refuse(exit::UNSUPPORTED, "domain class", format!("class {class:?} is out of scope")));
    }
    let omega1 = build_exhaustion_domain(spec, 1).map_err(|e| tower_refusal(&e.into()))?;
    let q = q_point(run.config, &omega1);
    let opts = LimitOptions { js: run.config.js(), ..LimitOptions::default() };
    info!("solving Ω_1 … Ω_{} at h = {}", run.config.n_max, run.config.h);
    let lim = solve_limit(spec, run.config.n_max, run.config.h, q, &opts).map_err(|e| tower_refusal(&e))?;
    run.lap("exhaustion");
    run.put("convergence", &lim.report);
    let r = &lim.report;
    if let Some(n) = r.divergence.iter().position(|d| !d.converges) {
        return Err(refuse(exit::DIVERGENCE, "divergence line", format!("n = {}: {}", n + 1, r.divergence[n])));
    }
    if let Some(n) = r.psi_within.iter().position(|ok| !ok) {
        let b = r.psi_bounds[n];
        return Err(refuse(
            exit::NON_CONVERGENCE,
            "conjugate bounds 0 <= psi <= 1",
            format!("n = {}: psi in [{}, {}]", n + 1, b[0], b[1]),
        ));
    }
    if !r.differences_decreasing {
        return Err(refuse(
            exit::NON_CONVERGENCE,
            "exhaustion differences decrease",
            format!("differences {:?}", r.differences),
        ));
    }
    Ok(lim)
}

fn write_tower(run: &mut Run, mesh: TowerMesh) -> Result<(), CliError> {
    let provenance = Provenance { spec: Some(run.config.spec.display().to_string()), ..mesh.provenance.clone() };
    let mesh = mesh.with_provenance(provenance);
    let sym = mesh.symmetry_report();
    run.put("tower_vertices", mesh.vertices.len());
    run.put("tower_triangles", mesh.triangles.len());
    run.put("tower_welded", mesh.welded);
    run.put("tower_ends", mesh.ends);
    run.put("tower_symmetry", sym);
    run.put("tower_symmetry_exact", sym.is_exact());
    run.lap("tower");
    run.write("tower.obj", &io::to_obj(&mesh))?;
    run.write("tower.ply", &io::to_ply(&mesh))?;
    run.write("tower.json", &io::sidecar_json(&mesh))?;
    run.lap("export");
    Ok(())
}

enum Flow {
    Done(String),
    Refused(Refusal),
}

fn dispatch(run: &mut Run, domain: &ParsedDomain) -> Result<Flow, CliError> {
    macro_rules! step {
        ($e:expr) => {
            match $e {
                Ok(v) => v,
                Err(r) => return Ok(Flow::Refused(r)),
            }
        };
    }
    let summary = match run.config.command {
        CommandKind::Validate => step!(validate_cmd(run, domain)),
        CommandKind::Solve => {
            let poly = step!(bounded(domain));
            let sol = step!(solve_bounded(run, poly));
            run.write("solution.txt", &io::dump_solution(&sol, None))?;
            format!("solved at M = {}", sol.truncation().unwrap_or(f64::NAN))
        }
        CommandKind::Conjugate => {
            let poly = step!(bounded(domain));
            let sol = step!(solve_bounded(run, poly));
            let conj = step!(conjugate_checked(run, &sol));
            run.write("solution.txt", &io::dump_solution(&sol, Some(&conj)))?;
            "conjugate piece is a graph".into()
        }
        CommandKind::Tower => {
            let (sol, conj) = match domain {
                ParsedDomain::Bounded(poly) => {
                    let sol = step!(solve_bounded(run, poly));
                    let conj = step!(conjugate_checked(run, &sol));
                    (sol, conj)
                }
                ParsedDomain::Unbounded(spec) => {
                    let lim = step!(limit(run, spec));
                    let sol = lim.solutions.last().expect("n_max >= 1").clone();
                    let conj = step!(conjugate_checked(run, &sol));
                    (sol, conj)
                }
            };
            let r0 = step!(inner_radius(sol.mesh().polygon()).map_err(|e| refuse(exit::INVALID_DOMAIN, "inner radius", e)));
            let curv = step!(curvature_estimate(&sol, r0).map_err(|e| tower_refusal(&e)));
            run.put("curvature_sup", curv.sup_abs);
            run.put("curvature_ratio", curv.ratio);
            run.put("inner_radius", r0);
            run.lap("curvature");
            let mesh = step!(build_tower(&conj, run.config.copies).map_err(|e| tower_refusal(&e)));
            let ends = mesh.ends;
            write_tower(run, mesh)?;
            format!("tower with {} slab(s) and {} ends per period", run.config.copies, ends)
        }
        CommandKind::Asympt => {
            let spec = step!(unbounded(domain));
            let lim = step!(limit(run, spec));
            let model = step!(scherk_reference(spec, EndSign::Plus).map_err(|e| tower_refusal(&e)));
            run.put("scherk", &model);
            let mut rows = Vec::new();
            for sol in lim.solutions.iter().skip(run.config.n_min.saturating_sub(1)) {
                let n = sol.mesh().polygon().len() / 4;
                let vertex = asymptotic_frame_vertex(n);
                let deviation = match deviation_at(sol, spec, vertex, &run.config.window) {
                    Ok(d) => Some(d),
                    Err(TowerError::WindowOutside(..)) => None,
                    Err(e) => step!(Err(tower_refusal(&e))),
                };
                rows.push(json!({"n": n, "vertex": vertex, "deviation": deviation}));
            }
            let devs: Vec<f64> = rows.iter().filter_map(|r| r["deviation"].as_f64()).collect();
            let monotone = devs.windows(2).all(|w| w[1] <= w[0] + run.config.tol_js);
            run.put("deviations", &rows);
            run.put("deviation_monotone", monotone);
            run.lap("asymptotics");
            match devs.last() {
                Some(d) => format!("final deviation {d:.3e} (monotone: {monotone})"),
                None => "window does not fit any Ω_n".into(),
            }
        }
    };
    Ok(Flow::Done(summary))
}

/// Runs one command. Pipeline refusals return `Ok` with a nonzero code and
/// a refusal in the report; unreadable input and unwritable output are
/// errors.
pub fn run(config: &RunConfig) -> Result<Outcome, CliError> {
    config.validate()?;
    std::fs::create_dir_all(&config.out).map_err(|source| IoError::File { path: config.out.display().to_string(), source })?;
    let mut run = Run { config, verdicts: Map::new(), artifacts: Vec::new(), timings: Map::new(), clock: Instant::now() };
    let flow = match io::parse_domain_spec(&config.spec) {
        Ok(domain) => {
            run.lap("parse");
            if let ParsedDomain::Bounded(p) = &domain {
                run.put("is_special_bounded", is_special_bounded(p));
            }
            dispatch(&mut run, &domain)?
        }
        Err(e @ IoError::File { .. }) => return Err(e.into()),
        Err(e) => Flow::Refused(refuse(exit::INVALID_DOMAIN, "domain invariants", e)),
    };
    let (code, summary, refusal) = match flow {
        Flow::Done(s) => (exit::OK, s, None),
        Flow::Refused(r) => (r.code, format!("refused: {}", r.message), Some(r)),
    };
    let timings = Value::Object(std::mem::take(&mut run.timings));
    let report_path = config.out.join("report.json");
    let mut artifacts = run.artifacts.clone();
    artifacts.push(report_path.display().to_string());
    let report = RunReport { command: config.command, config: config.clone(), verdicts: run.verdicts, artifacts, refusal };
    io::write_file(&report_path, &serde_json::to_string_pretty(&report).expect("report serializes"))?;
    io::write_file(config.out.join("timings.json"), &serde_json::to_string_pretty(&timings).expect("timings serialize"))?;
    Ok(Outcome { code, report, summary })
}

/// Path of the report written by [`run`].
pub fn report_path(out: &Path) -> PathBuf {
    out.join("report.json")
}
