mod common;

use std::sync::Arc;

use proptest::prelude::*;
use saddle_tower::conjugation::{
    conjugate, conjugate_form, conjugate_function, conjugate_immersion, hodge_star, krust_check,
    polygon_edge_flux, rotation_consistency, ConjugateOptions, Recovery,
};
use saddle_tower::geometry::{P2, V2};
use saddle_tower::mesh::triangulate;
use saddle_tower::solver::solve_jenkins_serrin;
use saddle_tower::{ConjugateSolution, GraphSolution, JsOptions, MarkedPolygon};

fn square_solution(h: f64) -> GraphSolution {
    solve_jenkins_serrin(&MarkedPolygon::unit_square(), P2::new(0.5, 0.5), &JsOptions::with_h(h)).unwrap()
}

fn triangle_gradient(conj: &ConjugateSolution, t: usize) -> V2 {
    let mesh = conj.mesh();
    let tri = mesh.triangles()[t];
    mesh.hat_gradients(t).iter().zip(tri).map(|(g, v)| g * conj.psi().value(v)).sum()
}

#[test]
fn square_fluxes_and_parity() {
    let sol = square_solution(1.0 / 32.0);
    let conj = conjugate(&sol, &ConjugateOptions::default()).unwrap();
    let poly = sol.mesh().polygon();
    for i in 0..poly.len() {
        let flux = polygon_edge_flux(&sol, conj.psi(), i).unwrap();
        let expected = if i % 2 == 0 { 1.0 } else { -1.0 };
        assert!((flux - expected).abs() <= 2e-2, "edge {i}: {flux}");
        let at_vertex = conj.psi().value(sol.mesh().vertex_node(i));
        assert!((at_vertex - (i % 2) as f64).abs() <= 2e-2, "vertex {i}: {at_vertex}");
    }
    assert!(conj.psi().min() >= -1e-2 && conj.psi().max() <= 1.0 + 1e-2);
}

#[test]
fn immersion_invariants_on_the_square() {
    let sol = square_solution(1.0 / 32.0);
    let conj = conjugate(&sol, &ConjugateOptions::default()).unwrap();
    for v in 0..sol.mesh().num_nodes() {
        assert_eq!(conj.position(v)[2], conj.psi().value(v));
    }
    let dist = sol.mesh().boundary_distances();
    for (t, &g) in sol.gradients().iter().enumerate() {
        assert!(conjugate_form(g).norm() < 1.0);
        // The nodal ψ integrates edge averages of the form. Its P1 gradient
        // differs from the form by O(h) times the form's variation, which
        // at distance 0.1 from a wall is enough to exceed 1.
        if sol.mesh().triangles()[t].iter().all(|&v| dist[v] >= 0.25) {
            assert!(triangle_gradient(&conj, t).norm() < 1.0, "triangle {t}");
        }
    }
    assert!(rotation_consistency(&sol).unwrap() <= 1e-12);
    let krust = conj.krust();
    assert!(krust.passes, "{krust:?}");
    let h = sol.mesh().h();
    assert!(conj.psi().max_loop_residual <= 10.0 * h * h);
}

#[test]
fn both_recoveries_agree_in_the_core() {
    let sol = square_solution(1.0 / 16.0);
    let psi = conjugate_function(&sol, 0, 0.0).unwrap();
    let tree = conjugate_immersion(&sol, &psi, &ConjugateOptions { recovery: Recovery::Tree, ..Default::default() }).unwrap();
    let lsq = conjugate_immersion(&sol, &psi, &ConjugateOptions::default()).unwrap();
    let dist = sol.mesh().boundary_distances();
    let base = sol.mesh().nearest_node(P2::new(0.5, 0.5));
    let shift = |c: &ConjugateSolution, v: usize, k: usize| c.position(v)[k] - c.position(base)[k];
    for v in (0..sol.mesh().num_nodes()).filter(|&v| dist[v] >= 0.25) {
        for k in 0..2 {
            assert!((shift(&tree, v, k) - shift(&lsq, v, k)).abs() < 2e-2);
        }
    }
}

#[test]
fn folded_sheet_is_not_a_graph() {
    let positions = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]];
    assert!(krust_check(&positions, &[[0, 1, 2], [1, 3, 2]]).passes);
    assert!(!krust_check(&positions, &[[0, 1, 2], [0, 1, 3]]).passes);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn star_of_du_is_the_conjugate_form(x in -1e3..1e3f64, y in -1e3..1e3f64) {
        let g = V2::new(x, y);
        let star = hodge_star(g, g).unwrap();
        let form = conjugate_form(g);
        prop_assert!((star - form).norm() <= 1e-12 * form.norm().max(1e-300));
        let w = (1.0 + g.norm_squared()).sqrt();
        prop_assert!((form - V2::new(-y, x) / w).norm() <= 1e-15 * w);
    }

    #[test]
    fn planes_have_closed_form_conjugates(a in -4.0..4.0f64, b in -4.0..4.0f64) {
        let mesh = Arc::new(triangulate(&MarkedPolygon::unit_square(), 0.25).unwrap());
        let u: Vec<f64> = mesh.points().iter().map(|p| a * p.x + b * p.y).collect();
        let sol = GraphSolution::from_nodal(mesh.clone(), u).unwrap();
        let psi = conjugate_function(&sol, 0, 0.0).unwrap();
        let w = (1.0 + a * a + b * b).sqrt();
        for (v, p) in mesh.points().iter().enumerate() {
            prop_assert!((psi.value(v) - (a * p.y - b * p.x) / w).abs() < 1e-12);
        }
        prop_assert!(psi.max_loop_residual < 1e-12);
        for i in 0..4 {
            let (p, q) = mesh.polygon().edge(i);
            let d = q - p;
            let expected = (a * d.y - b * d.x) / w;
            prop_assert!((polygon_edge_flux(&sol, &psi, i).unwrap() - expected).abs() < 1e-12);
        }
        prop_assert!(rotation_consistency(&sol).unwrap() <= 1e-12);
    }
}
