use super::*;
use crate::casebook::{builtin_names, load_scenario};
use crate::symexpr::{parse_complex, ParseContext};
use proptest::prelude::*;

fn degenerate() -> Scenario {
    ScenarioFile::from_json(include_str!("../../../../scenarios/degenerate-contact.json"))
        .unwrap()
        .build()
        .unwrap()
}

#[test]
fn builtins_load() {
    for name in builtin_names() {
        let s = load_scenario(name).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(s.name, name);
        assert!(s.diag_gram().is_ok(), "{name} should have an orthogonal frame");
    }
}

#[test]
fn heisenberg_structure_functions() {
    let s = load_scenario("real-heisenberg-contact").unwrap();
    // [e1, e2] = -e3
    assert_eq!(s.structure(2, 0, 1), &CExpr::int(-1));
    assert_eq!(s.structure(2, 1, 0), &CExpr::int(1));
    assert!(s.structure(0, 0, 1).is_zero_structural());
}

#[test]
fn invariant_scenarios_have_constant_structure() {
    for name in builtin_names() {
        let s = load_scenario(name).unwrap();
        if !s.invariant {
            continue;
        }
        let n = s.n();
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    assert!(s.structure(k, i, j).as_constant().is_some(), "{name} c^{k}_{i}{j}");
                }
            }
        }
    }
}

#[test]
fn nonholomorphic_distribution_is_rejected() {
    let mut f = ScenarioFile::from_json(include_str!("../../scenarios/flat-kaehler.json")).unwrap();
    f.frame[0][1] = "conj(z1)".into();
    assert!(matches!(f.build(), Err(Error::NotHolomorphic(_))));
}

#[test]
fn malformed_files_are_rejected() {
    let mut f = ScenarioFile::from_json(include_str!("../../scenarios/pfaff-chart.json")).unwrap();
    f.bounds.pop();
    assert!(matches!(f.build(), Err(Error::Validation(_))));
    let mut f = ScenarioFile::from_json(include_str!("../../scenarios/pfaff-chart.json")).unwrap();
    f.frame[2] = vec!["0".into(), "0".into(), "1".into()];
    assert!(matches!(f.build(), Err(Error::FrameNotInvertible(_))));
    assert!(ScenarioFile::from_json("{\"name\": 3}").is_err());
}

#[test]
fn phi_two_ways_agree() {
    for name in builtin_names() {
        let s = load_scenario(name).unwrap();
        for x in sample_points(&s, 6) {
            let a = fiber_projectors(&s, &x).unwrap().phi;
            let b = phi_via_brackets(&s, &x).unwrap();
            assert_eq!(a.len(), b.len());
            for ((ia, va), (ib, vb)) in a.iter().zip(&b) {
                assert_eq!(ia, ib);
                assert!((va - vb).norm() < 1e-12, "{name} at {x:?}");
            }
        }
    }
}

#[test]
fn heisenberg_fiber_ranks() {
    let s = load_scenario("real-heisenberg-contact").unwrap();
    let fd = fiber_projectors(&s, &s.center()).unwrap();
    assert_eq!(fd.f_phi_ranks, vec![0, 0, 1, 0]);
    assert_eq!(fd.q_ranks(), vec![1, 2, 0, 0]);
    let s = load_scenario("complex-heisenberg-standard").unwrap();
    let fd = fiber_projectors(&s, &[0.2, -0.1, 0.3, 0.4, -0.5, 0.7]).unwrap();
    assert_eq!(fd.f_phi_ranks, vec![0, 0, 1, 0, 0, 0, 0]);
    assert_eq!(fd.q_ranks(), vec![1, 4, 4, 0, 0, 0, 0]);
    let pq = &fd.pi_q;
    assert!((pq * pq - pq).camax() < 1e-12);
    assert!((pq.adjoint() - pq).camax() < 1e-12);
}

#[test]
fn involutive_distributions_have_no_curvature() {
    for name in ["involutive-product", "involutive-product-complex", "flat-kaehler"] {
        let s = load_scenario(name).unwrap();
        let fd = fiber_projectors(&s, &s.center()).unwrap();
        assert!(fd.f_phi_ranks.iter().all(|r| *r == 0), "{name}");
    }
}

#[test]
fn bracket_generation_steps() {
    let s = load_scenario("real-heisenberg-contact").unwrap();
    assert_eq!(bracket_generating(&s, 4).unwrap().step, 2);
    let s = load_scenario("complex-heisenberg-standard").unwrap();
    assert_eq!(bracket_generating(&s, 4).unwrap().step, 2);
    let s = load_scenario("flat-kaehler").unwrap();
    assert_eq!(bracket_generating(&s, 4).unwrap().step, 1);
    let s = load_scenario("involutive-product").unwrap();
    match bracket_generating(&s, 3) {
        Err(Error::MaxDepthExceeded { ranks, .. }) => assert_eq!(ranks[0], 2),
        other => panic!("expected failure, got {other:?}"),
    }
}

#[test]
fn builtins_pass_rank_audit() {
    for name in builtin_names() {
        let s = load_scenario(name).unwrap();
        let a = constant_rank_audit(&s, 16).unwrap();
        assert!(a.passed, "{name}: {:?}", a.outliers);
    }
}

#[test]
fn degenerate_scenario_fails_rank_audit() {
    let s = degenerate();
    let a = constant_rank_audit(&s, 16).unwrap();
    assert!(!a.passed);
    assert!(a.outliers.iter().all(|(x, _)| x[0].abs() < 1e-12));
    assert!(!a.outliers.is_empty());
}

#[test]
fn sampling_is_deterministic_and_inside() {
    let s = load_scenario("pfaff-chart").unwrap();
    let a = sample_points(&s, 40);
    assert_eq!(a, sample_points(&s, 40));
    assert_eq!(a[0], s.center());
    for p in &a {
        for (v, (lo, hi)) in p.iter().zip(&s.bounds) {
            assert!(v >= lo && v <= hi);
        }
    }
}

fn arb_field() -> impl Strategy<Value = VectorField> {
    let ctx = ParseContext::real(&["x", "y", "z"]);
    let terms = ["0", "1", "x", "y", "z", "x*y", "z^2", "x - y", "2*y*z"];
    prop::collection::vec(0usize..terms.len(), 3).prop_map(move |ix| {
        VectorField::new(ix.iter().map(|i| parse_complex(terms[*i], &ctx).unwrap()).collect())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bracket_is_antisymmetric(a in arb_field(), b in arb_field()) {
        let ch = Chart::Real(3);
        let ab = lie_bracket(ch, &a, &b).unwrap();
        let ba = lie_bracket(ch, &b, &a).unwrap();
        prop_assert_eq!(ab.add(&ba).is_zero(), Tri::Yes);
    }

    #[test]
    fn bracket_satisfies_jacobi(a in arb_field(), b in arb_field(), c in arb_field()) {
        let ch = Chart::Real(3);
        let br = |x: &VectorField, y: &VectorField| lie_bracket(ch, x, y).unwrap();
        let j = br(&a, &br(&b, &c)).add(&br(&b, &br(&c, &a))).add(&br(&c, &br(&a, &b)));
        prop_assert_eq!(j.is_zero(), Tri::Yes);
    }
}
