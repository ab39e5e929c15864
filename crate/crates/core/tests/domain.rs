mod common;

use std::f64::consts::PI;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use saddle_tower::domain::{
    build_exhaustion_domain, chord_criterion, classify_domain, inner_radius, is_special_bounded,
    jenkins_serrin_bruteforce, quadrilateral_compare, LengthOrdering,
};
use saddle_tower::geometry::{dist_point_segment, P2};
use saddle_tower::{DomainClass, Mark, MarkedPolygon, UnboundedDomainSpec};

use common::{random_unitary_polygon, special_domain};

fn verdicts(poly: &MarkedPolygon) -> (bool, bool, bool) {
    (
        !is_special_bounded(poly),
        chord_criterion(poly).holds,
        jenkins_serrin_bruteforce(poly).unwrap().holds,
    )
}

#[test]
fn random_polygons_satisfy_all_three_criteria() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..300 {
        let n = 4 + 2 * (trial % 5);
        let poly = random_unitary_polygon(&mut rng, n);
        assert_eq!(verdicts(&poly), (true, true, true), "{:?}", poly.vertices());
    }
}

#[test]
fn special_domains_fail_all_three_criteria() {
    for k in 3..=6 {
        for beta in [PI / 2.0, PI / 3.0, 2.0 * PI / 3.0, 1.3] {
            let poly = special_domain(k, beta);
            assert_eq!(poly.len(), 2 * k);
            assert_eq!(verdicts(&poly), (false, false, false), "k = {k}, beta = {beta}");
            let chord = chord_criterion(&poly).witness.unwrap();
            assert!((chord.length - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn small_parallelograms_are_not_special() {
    // k = 2: the rhombus has no chord of length one between an even and an odd vertex.
    let poly = special_domain(2, PI / 3.0);
    assert_eq!(verdicts(&poly), (true, true, true));
    let square = MarkedPolygon::unit_square();
    assert_eq!(verdicts(&square), (true, true, true));
}

#[test]
fn marks_alternate_from_edge_zero() {
    let poly = special_domain(4, 1.0);
    for i in 0..poly.len() {
        assert_eq!(poly.mark(i), if i % 2 == 0 { Mark::Plus } else { Mark::Minus });
    }
}

#[test]
fn inner_radius_examples() {
    assert!((inner_radius(&MarkedPolygon::unit_square()).unwrap() - 0.5).abs() < 1e-12);
    let hex = special_domain(3, PI / 2.0);
    assert!((inner_radius(&hex).unwrap() - 0.5).abs() < 1e-12);
    let mut regular = vec![P2::origin()];
    for k in 0..5 {
        let last = regular[k];
        regular.push(last + common::unit(k as f64 * PI / 3.0));
    }
    let regular = MarkedPolygon::with_default_tol(regular).unwrap();
    // The 120° angle puts the foot of the perpendicular onto the next edge
    // outside it, so the nearest non-incident edge is at distance 1.
    assert!((inner_radius(&regular).unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn right_angle_exhaustion() {
    let spec = UnboundedDomainSpec::right_angle();
    let square = build_exhaustion_domain(&spec, 1).unwrap();
    let expected = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
    assert_eq!(square.len(), 4);
    for (p, e) in square.vertices().iter().zip(expected) {
        assert!((p.x - e.0).abs() < 1e-12 && (p.y - e.1).abs() < 1e-12, "{p:?}");
    }
    for n in 1..=5 {
        let poly = build_exhaustion_domain(&spec, n).unwrap();
        assert_eq!(poly.len(), 4 * n);
        assert!(chord_criterion(&poly).holds);
        assert!(!is_special_bounded(&poly));
    }
}

fn general_spec() -> impl Strategy<Value = UnboundedDomainSpec> {
    (0.1..PI / 2.0, 0.0..0.6f64).prop_filter_map("general class", |(theta, ratio)| {
        let spec = UnboundedDomainSpec::geometric(theta, ratio).ok()?;
        (classify_domain(&spec).ok()? == DomainClass::General).then_some(spec)
    })
}

fn quadrilateral() -> impl Strategy<Value = (P2, P2, P2, P2)> {
    (0.3..3.0f64, 0.1..PI - 0.2, 0.0..1.0f64, 0.2..2.0f64, any::<bool>()).prop_filter_map(
        "convex quadrilateral",
        |(len, alpha, t, leg, closed)| {
            let beta = if closed { PI - alpha } else { 0.05 + t * (PI - alpha - 0.1) };
            let a = P2::new(0.0, 0.0);
            let b = P2::new(len, 0.0);
            let d = a + common::unit(alpha) * leg;
            let c = b + common::unit(PI - beta) * leg;
            let pts = [a, b, c, d];
            let convex = (0..4).all(|i| {
                saddle_tower::geometry::orient(pts[i], pts[(i + 1) % 4], pts[(i + 2) % 4]) > 1e-6
            });
            convex.then_some((a, b, c, d))
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exhaustion_domains_are_valid(spec in general_spec(), n in 1usize..=5) {
        let poly = build_exhaustion_domain(&spec, n).unwrap();
        prop_assert_eq!(poly.len(), 4 * n);
        prop_assert!(chord_criterion(&poly).holds);
        for i in 0..poly.len() {
            let (a, b) = poly.edge(i);
            prop_assert!(((b - a).norm() - 1.0).abs() < 1e-9);
            prop_assert!(poly.interior_angle(i) <= PI + 1e-9);
        }
    }

    #[test]
    fn inner_radius_gives_sector_disks(seed in any::<u64>(), half in 2usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let poly = random_unitary_polygon(&mut rng, 2 * half);
        let r0 = inner_radius(&poly).unwrap();
        prop_assert!(r0 > 0.0 && r0 <= 1.0);
        let n = poly.len();
        for i in 0..n {
            let p = poly.vertex(i);
            for j in 0..n {
                if j == i || (j + 1) % n == i {
                    continue;
                }
                let (a, b) = poly.edge(j);
                prop_assert!(dist_point_segment(p, a, b) >= 2.0 * r0 - 1e-12);
            }
        }
    }

    #[test]
    fn quadrilateral_equality_iff_parallelogram((a, b, c, d) in quadrilateral()) {
        if let Ok(cmp) = quadrilateral_compare(a, b, c, d, 1e-9) {
            prop_assert_eq!(cmp.ordering == LengthOrdering::Equal, cmp.is_parallelogram);
            prop_assert!(cmp.ordering != LengthOrdering::Greater);
            prop_assert!((cmp.cd - (c - d).norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn polygon_rotation_keeps_verdicts(seed in any::<u64>(), half in 2usize..=4, shift in 0usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let poly = random_unitary_polygon(&mut rng, 2 * half);
        let n = poly.len();
        // An even relabelling keeps the marks on the same edges.
        let s = 2 * shift % n;
        let rolled: Vec<P2> = (0..n).map(|i| poly.vertex((i + s) % n)).collect();
        let rolled = MarkedPolygon::with_default_tol(rolled).unwrap();
        prop_assert_eq!(verdicts(&rolled), verdicts(&poly));
    }
}
