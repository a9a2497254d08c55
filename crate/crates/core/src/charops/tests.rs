use super::*;
use crate::casebook::load_scenario;
use crate::exterior::Form;
use crate::framedgeom::{fiber_projectors, sample_covectors, sample_points, Scenario};
use crate::symexpr::{parse_complex, CExpr, ParseContext, Tri};
use nalgebra::DMatrix;
use num_complex::Complex64;

fn ctx(s: &Scenario) -> ParseContext {
    if s.is_complex() {
        let names: Vec<&str> = s.coord_names.iter().map(String::as_str).collect();
        ParseContext::complex(&names)
    } else {
        let names: Vec<&str> = s.coord_names.iter().map(String::as_str).collect();
        ParseContext::real(&names)
    }
}

/// A polynomial test form touching every monomial of grade `k`.
fn poly_form(s: &Scenario, k: usize, seed: usize) -> Form {
    let c = ctx(s);
    let vars: Vec<String> = if s.is_complex() {
        s.coord_names.iter().flat_map(|v| [v.clone(), format!("conj({v})")]).collect()
    } else {
        s.coord_names.clone()
    };
    let basis = s.basis();
    let mut f = Form::zero(basis);
    for mask in 0..basis.dim() as u32 {
        if mask.count_ones() as usize != k {
            continue;
        }
        let i = (mask as usize + seed) % vars.len();
        let j = (mask as usize * 7 + seed * 3) % vars.len();
        let src = format!("{} * {} + {}", vars[i], vars[j], (mask as usize + seed) % 3);
        f.add_term(mask, parse_complex(&src, &c).unwrap());
    }
    f
}

const NAMES: &[&str] = &[
    "real-heisenberg-contact",
    "pfaff-chart",
    "involutive-product",
    "flat-torus",
    "flat-kaehler",
    "nonkaehler-hermitian",
    "complex-heisenberg-invariant",
    "complex-heisenberg-standard",
];

#[test]
fn d_squares_to_zero() {
    for name in NAMES {
        let s = load_scenario(name).unwrap();
        let d = exterior_d(&s).unwrap();
        for k in 0..2 {
            let u = poly_form(&s, k, 1);
            let ddu = d.apply(&s, &d.apply(&s, &u).unwrap()).unwrap();
            assert_eq!(ddu.is_zero(), Tri::Yes, "{name} grade {k}");
        }
    }
}

#[test]
fn d_of_function_is_frame_differential() {
    let s = load_scenario("real-heisenberg-contact").unwrap();
    let f = parse_complex("p^2*t", &ctx(&s)).unwrap();
    let df = exterior_d(&s).unwrap().apply(&s, &Form::scalar(s.basis(), f.clone())).unwrap();
    for k in 0..3 {
        let want = s.apply(k, &f).unwrap();
        assert_eq!(df.coeff(1 << k).sub(&want).is_zero(), Tri::Yes);
    }
}

#[test]
fn codifferential_routes_agree() {
    for name in ["real-heisenberg-contact", "pfaff-chart", "flat-torus"] {
        let s = load_scenario(name).unwrap();
        let fm = FrameMetric::new(&s).unwrap();
        let a = codifferential(&s, &fm).unwrap();
        let b = codifferential_via_star(&s).unwrap();
        assert_eq!(a.equals(&b), Tri::Yes, "{name}");
    }
}

#[test]
fn flat_torus_laplacian_of_sine() {
    let s = load_scenario("flat-torus").unwrap();
    let ops = build_characteristic_ops(&s).unwrap();
    let f = parse_complex("sin(x)", &ctx(&s)).unwrap();
    let u = Form::scalar(s.basis(), f.clone());
    let lu = ops.laplacian.apply(&s, &u).unwrap();
    assert_eq!(lu.coeff(0).sub(&f).is_zero(), Tri::Yes);
    let one = Form::monomial(s.basis(), 0b01, f.clone());
    let lu = ops.laplacian.apply(&s, &one).unwrap();
    assert_eq!(lu.coeff(0b01).sub(&f).is_zero(), Tri::Yes);
}

#[test]
fn d_splits_into_dolbeault_parts() {
    for name in ["flat-kaehler", "nonkaehler-hermitian", "complex-heisenberg-standard"] {
        let s = load_scenario(name).unwrap();
        let d = exterior_d(&s).unwrap();
        let (del, delbar) = dolbeault_split(&s).unwrap();
        let sum = del.add(&delbar).unwrap();
        assert_eq!(sum.equals(&d), Tri::Yes, "{name}");
        let u = poly_form(&s, 1, 2);
        let dd = del.apply(&s, &del.apply(&s, &u).unwrap()).unwrap();
        assert_eq!(dd.is_zero(), Tri::Yes, "{name}");
        let bb = delbar.apply(&s, &delbar.apply(&s, &u).unwrap()).unwrap();
        assert_eq!(bb.is_zero(), Tri::Yes, "{name}");
    }
    let s = load_scenario("pfaff-chart").unwrap();
    assert!(matches!(dolbeault_split(&s), Err(crate::Error::NotComplexScenario)));
}

fn rel_err(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
}

#[test]
fn oracle_matches_closed_forms() {
    for name in ["real-heisenberg-contact", "pfaff-chart", "complex-heisenberg-invariant"] {
        let s = load_scenario(name).unwrap();
        let ops = build_characteristic_ops(&s).unwrap();
        let d_q = symbol_oracle(&s, &ops.op("d_Q").unwrap(), 1).unwrap();
        let d_q_star = symbol_oracle(&s, &ops.op("d_Q*").unwrap(), 1).unwrap();
        let lap = symbol_oracle(&s, &ops.laplacian, 2).unwrap();
        let xis = sample_covectors(s.n(), 4, 3);
        for (x, xi) in sample_points(&s, 4).iter().zip(&xis) {
            let fd = fiber_projectors(&s, x).unwrap();
            let cf = closed_form_symbols(&s, &fd, xi).unwrap();
            let e1 = rel_err(&d_q.eval(x, xi).unwrap(), &fd.to_frame_basis(&cf.d_q));
            let e2 = rel_err(&d_q_star.eval(x, xi).unwrap(), &fd.to_frame_basis(&cf.d_q_star));
            let e3 = rel_err(&lap.eval(x, xi).unwrap(), &fd.to_frame_basis(&cf.laplacian));
            assert!(e1 < 1e-10 && e2 < 1e-10 && e3 < 1e-10, "{name}: {e1} {e2} {e3}");
        }
    }
}

#[test]
fn contact_degree_one_symbol() {
    let s = load_scenario("real-heisenberg-contact").unwrap();
    let x = [0.1, -0.3, 0.2];
    let fd = fiber_projectors(&s, &x).unwrap();
    let xi = [0.6, -0.8, 0.3];
    let cv = covector_data(&s, &fd, &xi).unwrap();
    let (a, b) = (cv.xi[0], cv.xi[1]);
    let l = closed_form_symbols(&s, &fd, &xi).unwrap().laplacian;
    let want = [[a * a, a * b], [a * b, b * b]];
    for (r, row) in want.iter().enumerate() {
        for (c, w) in row.iter().enumerate() {
            assert!((l[(1 << r, 1 << c)] - w).norm() < 1e-12);
        }
    }
    let h = hoermander_applicability(&s, &[fd], &[xi.to_vec()]).unwrap();
    assert!(!h.applicable);
    assert_eq!(h.witness.as_ref().unwrap().0, 1);
}

#[test]
fn full_distribution_gives_scalar_symbol() {
    for name in ["flat-torus", "flat-kaehler", "nonkaehler-hermitian"] {
        let s = load_scenario(name).unwrap();
        let fd = fiber_projectors(&s, &sample_points(&s, 2)[1]).unwrap();
        let xis = sample_covectors(s.n(), 3, 5);
        let h = hoermander_applicability(&s, &[fd], &xis).unwrap();
        assert!(h.applicable, "{name}");
    }
}

#[test]
fn order_above_operator_is_rejected() {
    let s = load_scenario("flat-torus").unwrap();
    let ops = build_characteristic_ops(&s).unwrap();
    assert!(matches!(
        symbol_oracle(&s, &ops.op("d_Q").unwrap(), 2),
        Err(crate::Error::OrderExceedsOperator { requested: 2, order: 1 })
    ));
}

#[test]
fn projectors_are_idempotent() {
    let s = load_scenario("complex-heisenberg-standard").unwrap();
    let ops = build_characteristic_ops(&s).unwrap();
    let pp = mat_mul(&ops.pi_q, &ops.pi_q);
    for (k, v) in &pp {
        assert_eq!(v.sub(ops.pi_q.get(k).unwrap_or(&CExpr::zero())).is_zero(), Tri::Yes);
    }
    assert_eq!(pp.len(), ops.pi_q.len());
}
