use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::*;
use crate::casebook::load_scenario;
use crate::charops::{build_characteristic_ops, symbol_oracle, FirstOrderOp, OperatorField};
use crate::framedgeom::{fiber_projectors, sample_covectors, sample_points, ScenarioFile};
use crate::symexpr::{parse_complex, ParseContext, Tri};

type C = Complex64;

fn unit(n: usize, k: usize) -> Vec<C> {
    let mut v = vec![C::new(0.0, 0.0); n];
    v[k] = C::new(1.0, 0.0);
    v
}

fn rel(a: &DMatrix<C>, b: &DMatrix<C>) -> f64 {
    (a - b).norm() / (1.0 + b.norm())
}

#[test]
fn lambda_is_adjoint_of_lefschetz() {
    for name in ["flat-kaehler", "nonkaehler-hermitian", "complex-heisenberg-standard"] {
        let s = load_scenario(name).unwrap();
        let hd = hermitian_data(&s).unwrap();
        for x in sample_points(&s, 3) {
            let fd = fiber_projectors(&s, &x).unwrap();
            let mats = hd.matrices_at(&fd).unwrap();
            let get = |k: &str| mats.iter().find(|(n, _)| *n == k).unwrap().1.clone();
            assert!(rel(&get("Lambda"), &get("L").adjoint()) < 1e-10, "{name}");
            assert!(rel(&get("Lambda_W"), &get("L_W").adjoint()) < 1e-10, "{name}");
        }
    }
}

#[test]
fn fundamental_form_is_real_of_type_one_one() {
    for name in ["flat-kaehler", "nonkaehler-hermitian", "complex-heisenberg-standard"] {
        let s = load_scenario(name).unwrap();
        let hd = hermitian_data(&s).unwrap();
        let b = s.basis();
        assert!(hd.theta.terms().all(|(mask, _)| b.bidegree(*mask) == (1, 1)));
        assert_eq!(hd.theta.sub(&hd.theta.conj()).unwrap().is_zero(), Tri::Yes, "{name}");
        assert!(hd.d_theta.terms().all(|(mask, _)| b.bidegree(*mask) == (2, 1)));
    }
}

#[test]
fn d_theta_closed_forms() {
    let s = load_scenario("flat-kaehler").unwrap();
    assert_eq!(hermitian_data(&s).unwrap().d_theta.is_zero(), Tri::Yes);

    // i conj(z1) dz1 ∧ dz2 ∧ conj(dz2)
    let s = load_scenario("nonkaehler-hermitian").unwrap();
    let hd = hermitian_data(&s).unwrap();
    let names: Vec<&str> = s.coord_names.iter().map(String::as_str).collect();
    let c = parse_complex("i*conj(z1)", &ParseContext::complex(&names)).unwrap();
    let expected = Form::monomial(s.basis(), 0b1011, c);
    assert_eq!(hd.d_theta.sub(&expected).unwrap().is_zero(), Tri::Yes, "{:?}", hd.d_theta);
}

#[test]
fn torsion_symbol_matches_oracle() {
    for name in ["nonkaehler-hermitian", "flat-kaehler"] {
        let s = load_scenario(name).unwrap();
        let hd = hermitian_data(&s).unwrap();
        let ops = build_characteristic_ops(&s).unwrap();
        let cx = ops.complex.as_ref().unwrap();
        let t = Arc::new(FirstOrderOp::multiplication(s.basis(), hd.torsion_op.clone()));
        let op = OperatorField::supercommutator("[delbar*, T]", 1, &cx.delbar_star, true, &t, true);
        let oracle = symbol_oracle(&s, &op, 1).unwrap();
        for x in sample_points(&s, 4) {
            let fd = fiber_projectors(&s, &x).unwrap();
            for xi in sample_covectors(s.n(), 3, 5) {
                let o = oracle.eval(&x, &xi).unwrap();
                let mine = fd.to_frame_basis(&torsion_symbol(&hd, &fd, &fd.covector(&s, &xi).unwrap()).unwrap());
                assert!((&o - &mine).norm() < 1e-9, "{name} {x:?}: oracle {o} closed {mine}");
            }
        }
    }
}

#[test]
fn kaehler_verdicts() {
    let r = kaehler_check(&load_scenario("flat-kaehler").unwrap(), 7, 4).unwrap();
    assert_eq!(r.is_kaehler, Tri::Yes);
    assert_eq!(r.torsion_symbol_max, 0.0);
    assert!(r.bigrading_max < 1e-12, "{r:?}");
    assert!(r.consistent);

    let r = kaehler_check(&load_scenario("nonkaehler-hermitian").unwrap(), 7, 4).unwrap();
    assert_eq!(r.is_kaehler, Tri::No);
    assert!(r.torsion_symbol_max > 1e-3, "{r:?}");
    assert!(r.bigrading_max > 3e-3, "{r:?}");
    assert!(r.consistent, "{r:?}");
    assert!(r.torsion_witness.is_some() && r.bigrading_witness.is_some());
}

#[test]
fn kaehler_check_needs_full_distribution() {
    let s = load_scenario("complex-heisenberg-standard").unwrap();
    assert!(matches!(kaehler_check(&s, 2, 2), Err(crate::error::Error::WrongDistribution(_))));
    let s = load_scenario("real-heisenberg-contact").unwrap();
    assert!(matches!(hermitian_data(&s), Err(crate::error::Error::NotComplexScenario)));
}

#[test]
fn second_fundamental_form_vanishes_iff_w_is_constant() {
    let s = load_scenario("involutive-product-complex").unwrap();
    for x in sample_points(&s, 3) {
        let jet = ProjectorJet::new(&s, &x, 1e-5).unwrap();
        for k in 0..3 {
            assert!(jet.a(&unit(3, k)).norm() < 1e-9);
        }
    }
    let s = load_scenario("complex-heisenberg-standard").unwrap();
    let x = sample_points(&s, 1).remove(0);
    let jet = ProjectorJet::new(&s, &x, 1e-5).unwrap();
    let total: f64 = (0..3).map(|k| jet.a(&unit(3, k)).norm()).sum();
    assert!(total > 1e-2, "{total}");
}

#[test]
fn second_fundamental_form_structure() {
    let s = load_scenario("complex-heisenberg-standard").unwrap();
    for x in sample_points(&s, 3) {
        let fine = ProjectorJet::new(&s, &x, 1e-5).unwrap();
        let coarse = ProjectorJet::new(&s, &x, 1e-4).unwrap();
        let v = vec![C::new(0.3, -0.2), C::new(-0.5, 0.1), C::new(0.25, 0.7)];
        let a = fine.a(&v);
        assert!((&a - coarse.a(&v)).norm() < 1e-5);
        // conjugate-linear in v
        let lam = C::new(0.6, -1.3);
        let scaled: Vec<C> = v.iter().map(|z| z * lam).collect();
        assert!((fine.a(&scaled) - &a * lam.conj()).norm() < 1e-8);
        let sum: DMatrix<C> = (0..3).map(|k| fine.a(&unit(3, k)) * v[k].conj()).fold(DMatrix::zeros(3, 3), |acc, m| acc + m);
        assert!((&sum - &a).norm() < 1e-8);
        // maps N into W and kills W
        for j in &fine.w {
            assert!(a.column(*j).norm() < 1e-8);
        }
        for a_ in &fine.normal {
            assert!(a.row(*a_).norm() < 1e-8);
        }
        let forms = second_fundamental(&s, &x, &v).unwrap();
        assert!((forms.a_star - a.adjoint()).norm() < 1e-12);
        assert!(forms.b.norm() < 1e-8);
    }
}

#[test]
fn obstruction_symbol_matches_oracle() {
    for name in ["complex-heisenberg-standard", "complex-heisenberg-invariant", "involutive-product-complex"] {
        let s = load_scenario(name).unwrap();
        let hd = hermitian_data(&s).unwrap();
        let ops = build_characteristic_ops(&s).unwrap();
        let op = ops.obstruction_operator().unwrap();
        let o1 = symbol_oracle(&s, &op, 1).unwrap();
        let o2 = symbol_oracle(&s, &op, 2).unwrap();
        for x in sample_points(&s, 3) {
            let fd = fiber_projectors(&s, &x).unwrap();
            let jet = ProjectorJet::from_fiber(&s, &fd, 1e-5).unwrap();
            for xi in sample_covectors(s.n(), 3, 9) {
                assert!(o2.eval(&x, &xi).unwrap().norm() < 1e-9, "{name}: second-order part");
                let o = o1.eval(&x, &xi).unwrap();
                let mine = fd.to_frame_basis(&obstruction_symbol(&s, &hd, &jet, &fd, &xi).unwrap());
                assert!((&o - &mine).norm() < 1e-6, "{name} {x:?}: oracle {o} closed {mine}");
            }
        }
    }
}

#[test]
fn obstruction_symbol_on_normal_covectors() {
    let s = load_scenario("complex-heisenberg-standard").unwrap();
    let hd = hermitian_data(&s).unwrap();
    let m = 3;
    for x in sample_points(&s, 3) {
        let fd = fiber_projectors(&s, &x).unwrap();
        let jet = ProjectorJet::from_fiber(&s, &fd, 1e-5).unwrap();
        for val in [C::new(1.0, 0.0), C::new(0.3, -0.8)] {
            let a = fd.n_hol()[0];
            let xi = normal_covector(&s, &fd, &[(a, val)]).unwrap();
            let xi_u = fd.covector(&s, &xi).unwrap();
            for j in fd.w_hol() {
                assert!(xi_u[j].norm() < 1e-12 && xi_u[j + m].norm() < 1e-12, "{xi_u:?}");
            }
            assert!((xi_u[a] - val).norm() < 1e-12);
            let sym = obstruction_symbol(&s, &hd, &jet, &fd, &xi).unwrap();
            for (j, expected) in normal_bracket_matrix(&s, &fd, &xi).unwrap() {
                let col = sym.column(1 << (m + j)).into_owned();
                assert!((&col - &expected).norm() < 1e-9, "column {j}: {col} vs {expected}");
                assert!(expected.norm() > 1e-3);
            }
        }
    }
}

#[test]
fn involutivity_verdicts() {
    for (name, expected) in [
        ("complex-heisenberg-standard", false),
        ("complex-heisenberg-invariant", false),
        ("involutive-product-complex", true),
        ("flat-kaehler", true),
    ] {
        let s = load_scenario(name).unwrap();
        let hd = hermitian_data(&s).unwrap();
        let v = involutivity_verdict(&s, &hd, 3).unwrap();
        assert_eq!(v.bigrading_preserved, expected, "{name}: {v:?}");
        assert!(v.consistent, "{name}: {v:?}");
        assert_eq!(v.witness.is_none(), expected);
    }
}

#[test]
fn involutivity_verdict_ignores_normal_metric() {
    let src = crate::casebook::builtin_source("complex-heisenberg-standard").unwrap();
    let mut file: serde_json::Value = serde_json::from_str(src).unwrap();
    file["metric"] = serde_json::json!({ "gram": [["3", "0", "0"], ["0", "1 + x*conj(x) + p*conj(p)", "0"], ["0", "0", "1 + p*conj(p)"]] });
    let s = ScenarioFile::from_json(&file.to_string()).unwrap().build().unwrap();
    let hd = hermitian_data(&s).unwrap();
    let v = involutivity_verdict(&s, &hd, 3).unwrap();
    assert!(!v.bigrading_preserved && v.consistent, "{v:?}");
}

#[test]
fn sub_kaehler_identity() {
    for name in ["flat-kaehler", "nonkaehler-hermitian", "involutive-product-complex", "complex-heisenberg-standard", "complex-heisenberg-invariant"] {
        let s = load_scenario(name).unwrap();
        let r = sub_kaehler_residual(&s, 3, 2).unwrap();
        assert!(r.max_residual < 1e-6, "{name}: {r:?}");
        assert!(r.max_lhs > 1e-3, "{name}: {r:?}");
        if name == "flat-kaehler" {
            assert!(r.max_correction < 1e-10);
        }
    }
}

/// Holomorphic line field in C^2 whose orthogonal complement is not
/// holomorphic, so the A-term of the identity is active.
fn tilted_line() -> crate::framedgeom::Scenario {
    let src = r#"{"name":"tilted-line","kind":"complex","coordinates":["z1","z2"],
      "frame":[["1","z2"],["-conj(z2)","1"]],"distribution":[0],"metric":"standard",
      "box":[[-1,1],[-1,1]],"seed":3}"#;
    ScenarioFile::from_json(src).unwrap().build().unwrap()
}

#[test]
fn sub_kaehler_identity_with_active_correction() {
    let r = sub_kaehler_residual(&tilted_line(), 6, 4).unwrap();
    assert!(r.max_correction > 0.1, "{r:?}");
    assert!(r.max_residual < 1e-6, "{r:?}");
}
