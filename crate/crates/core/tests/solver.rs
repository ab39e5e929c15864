mod common;

use std::sync::Arc;

use proptest::prelude::*;
use saddle_tower::geometry::P2;
use saddle_tower::mesh::triangulate;
use saddle_tower::solver::{
    detect_divergence_lines, run_jenkins_serrin, solve_dirichlet, solve_dirichlet_from, solve_jenkins_serrin,
    vertex_gradient_check, SolverError,
};
use saddle_tower::tower::scherk_half_plane;
use saddle_tower::{GraphSolution, JsOptions, MarkedPolygon, SolveOptions};

use common::{special_domain, square_oracle, square_oracle_residual, sup_error};

fn square_mesh(h: f64) -> Arc<saddle_tower::TriMesh> {
    Arc::new(triangulate(&MarkedPolygon::unit_square(), h).unwrap())
}

fn nodal(mesh: &saddle_tower::TriMesh, f: impl Fn(P2) -> f64) -> Vec<f64> {
    mesh.points().iter().map(|&p| f(p)).collect()
}

fn center() -> P2 {
    P2::new(0.5, 0.5)
}

#[test]
fn square_oracle_solves_the_equation() {
    let mut worst: f64 = 0.0;
    for i in 1..20 {
        for j in 1..20 {
            let p = P2::new(i as f64 / 20.0, j as f64 / 20.0);
            worst = worst.max(square_oracle_residual(p).abs());
        }
    }
    assert!(worst <= 1e-8, "{worst}");
    let fd = common::mse_residual(|x, y| square_oracle(P2::new(x, y)), 0.3, 0.6, 1e-4);
    assert!(fd.abs() < 1e-4, "{fd}");
}

#[test]
fn zero_data_gives_zero() {
    let mesh = square_mesh(1.0 / 8.0);
    let sol = solve_dirichlet(mesh.clone(), &vec![0.0; mesh.num_nodes()], &SolveOptions::default()).unwrap();
    assert!(sol.values().iter().all(|&u| u.abs() < 1e-12));
}

#[test]
fn square_matches_oracle_and_is_normalized() {
    let sol = solve_jenkins_serrin(&MarkedPolygon::unit_square(), center(), &JsOptions::with_h(1.0 / 32.0)).unwrap();
    let q = sol.mesh().nearest_node(center());
    assert_eq!(sol.value(q), 0.0);
    let err = sup_error(&sol, square_oracle, 0.1);
    assert!(err <= 1e-2, "sup error {err}");
    assert!(sol.truncation().is_some());
}

#[test]
fn refinement_decreases_the_error() {
    let errs: Vec<f64> = [1.0 / 16.0, 1.0 / 32.0]
        .iter()
        .map(|&h| {
            let sol = solve_jenkins_serrin(&MarkedPolygon::unit_square(), center(), &JsOptions::with_h(h)).unwrap();
            sup_error(&sol, square_oracle, 0.1)
        })
        .collect();
    assert!(errs[1] < errs[0], "{errs:?}");
}

#[test]
fn smooth_dirichlet_converges_at_second_order() {
    // The half-plane Scherk function is smooth on [0.25, 1.25] × [0.5, 1.5].
    let shift = P2::new(0.25, 0.5);
    let poly = MarkedPolygon::with_default_tol(
        [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)].iter().map(|&(x, y)| P2::new(x + shift.x, y + shift.y)).collect(),
    )
    .unwrap();
    let errs: Vec<f64> = [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0]
        .iter()
        .map(|&h| {
            let mesh = Arc::new(triangulate(&poly, h).unwrap());
            let data = nodal(&mesh, scherk_half_plane);
            let sol = solve_dirichlet(mesh, &data, &SolveOptions::default()).unwrap();
            sup_error(&sol, scherk_half_plane, 0.0)
        })
        .collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 1.5, "errors {errs:?}");
    }
}

#[test]
fn start_does_not_matter() {
    let mesh = square_mesh(1.0 / 8.0);
    let data = nodal(&mesh, |p| (3.0 * p.x).sin() + p.y * p.y);
    let a = solve_dirichlet(mesh.clone(), &data, &SolveOptions::default()).unwrap();
    let mut start = data.clone();
    for (v, k) in mesh.kinds().iter().enumerate() {
        if !k.is_boundary() {
            start[v] = 5.0 * (v as f64).cos();
        }
    }
    let b = solve_dirichlet_from(mesh, start, &SolveOptions::default()).unwrap();
    let diff = a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(diff < 1e-8, "{diff}");
}

#[test]
fn truncation_raises_u_near_plus_edges() {
    let opts = JsOptions { full_schedule: true, ..JsOptions::with_h(1.0 / 16.0) };
    let run = run_jenkins_serrin(&MarkedPolygon::unit_square(), center(), &opts).unwrap();
    assert_eq!(run.solutions.len(), opts.m_schedule.len());
    let mesh = run.solutions[0].mesh();
    let near_plus: Vec<usize> = (0..mesh.num_nodes())
        .filter(|&v| {
            let p = mesh.point(v);
            p.y.min(1.0 - p.y) < 0.1 && p.x > 0.2 && p.x < 0.8
        })
        .collect();
    assert!(!near_plus.is_empty());
    for pair in run.solutions.windows(2) {
        for &v in &near_plus {
            assert!(pair[1].value(v) >= pair[0].value(v) - 1e-6);
        }
    }
}

#[test]
fn planes_show_vertical_divergence_lines() {
    let mesh = square_mesh(1.0 / 16.0);
    let plane = |n: f64| GraphSolution::from_nodal(mesh.clone(), nodal(&mesh, |p| n * p.x)).unwrap();
    let report = detect_divergence_lines(&[plane(50.0), plane(100.0)]).unwrap();
    assert!(!report.converges);
    assert!(!report.segments.is_empty());
    for s in &report.segments {
        assert!((s.a[0] - s.b[0]).abs() < 1e-9, "{s:?}");
        assert!(s.flux_ratio >= 0.99);
    }
}

#[test]
fn square_schedule_has_no_divergence_lines() {
    let opts = JsOptions { full_schedule: true, ..JsOptions::with_h(1.0 / 32.0) };
    let run = run_jenkins_serrin(&MarkedPolygon::unit_square(), center(), &opts).unwrap();
    let report = detect_divergence_lines(&run.solutions).unwrap();
    assert!(report.converges, "{report}");
}

#[test]
fn special_hexagon_is_refused_and_its_chord_found() {
    let hex = special_domain(3, std::f64::consts::FRAC_PI_2);
    let q = P2::new(1.0, 0.5) + nalgebra::Vector2::new(0.5, 0.0);
    match solve_jenkins_serrin(&hex, q, &JsOptions::default()) {
        Err(SolverError::ChordCriterion { chord }) => {
            // Vertex 1 is (1, 0) and vertex 4 is (1, 1).
            assert_eq!((chord.a, chord.b), ([1.0, 0.0], [1.0, 1.0]));
        }
        other => panic!("expected a refusal, got {other:?}"),
    }
    let h = 1.0 / 32.0;
    let forced = JsOptions { force: true, full_schedule: true, ..JsOptions::with_h(h) };
    let run = run_jenkins_serrin(&hex, q, &forced).unwrap();
    let report = detect_divergence_lines(&run.solutions).unwrap();
    assert!(!report.converges);
    let chord = (P2::new(1.0, 0.0), P2::new(1.0, 1.0));
    assert!(report.segments.iter().any(|s| s.distance_to(chord.0, chord.1) <= h), "{report}");
}

#[test]
fn vertex_gradients_blow_up_on_the_square() {
    let sol = solve_jenkins_serrin(&MarkedPolygon::unit_square(), center(), &JsOptions::with_h(1.0 / 32.0)).unwrap();
    let wide = vertex_gradient_check(&sol, 0.5, 0.05).unwrap();
    assert!(wide.iter().all(|g| g.passes), "{wide:?}");
    // Shrinking δ keeps every verdict until the disks run out of nodes.
    for delta in [0.04, 0.03, 0.02, 0.01] {
        match vertex_gradient_check(&sol, 0.5, delta) {
            Ok(narrow) => {
                for (a, b) in wide.iter().zip(&narrow) {
                    assert!(b.passes && b.min_w >= a.min_w, "delta {delta}: {b:?}");
                }
            }
            Err(SolverError::EmptyDisk(_)) => break,
            Err(e) => panic!("{e}"),
        }
    }
    let flat = GraphSolution::from_nodal(sol.mesh_arc().clone(), vec![0.0; sol.mesh().num_nodes()]).unwrap();
    assert!(vertex_gradient_check(&flat, 0.5, 0.05).unwrap().iter().all(|g| !g.passes));
}

#[test]
fn bad_options_are_rejected() {
    let square = MarkedPolygon::unit_square();
    let opts = JsOptions { m_schedule: vec![4.0, 2.0], ..JsOptions::with_h(0.25) };
    assert!(matches!(solve_jenkins_serrin(&square, center(), &opts), Err(SolverError::InvalidOption(_))));
    let opts = JsOptions::with_h(0.25);
    assert!(matches!(
        solve_jenkins_serrin(&square, P2::new(2.0, 0.5), &opts),
        Err(SolverError::BadNormalization(..))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn affine_data_is_reproduced(a in -3.0..3.0f64, b in -3.0..3.0f64, c in -2.0..2.0f64) {
        let mesh = square_mesh(1.0 / 8.0);
        let f = |p: P2| a * p.x + b * p.y + c;
        let sol = solve_dirichlet(mesh.clone(), &nodal(&mesh, f), &SolveOptions::default()).unwrap();
        prop_assert!(sup_error(&sol, f, 0.0) < 1e-8);
    }

    #[test]
    fn maximum_principle(k in 1.0..6.0f64, phase in 0.0..6.3f64, amp in 0.1..4.0f64) {
        let mesh = square_mesh(1.0 / 8.0);
        let data = nodal(&mesh, |p| amp * (k * p.x + phase).sin() * (p.y * k).cos());
        let sol = solve_dirichlet(mesh.clone(), &data, &SolveOptions::default()).unwrap();
        let boundary: Vec<f64> =
            (0..mesh.num_nodes()).filter(|&v| mesh.kind(v).is_boundary()).map(|v| data[v]).collect();
        let lo = boundary.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = boundary.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for &u in sol.values() {
            prop_assert!(u >= lo - 1e-9 && u <= hi + 1e-9);
        }
    }
}
