use super::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use crate::symexpr::{parse_complex, ParseContext};

fn basis3() -> Basis {
    Basis::real(Coframe::Coordinate, 3)
}

fn cx(s: &str) -> CExpr {
    parse_complex(s, &ParseContext::real(&["x", "y", "t"])).unwrap()
}

#[test]
fn wedge_of_one_forms_anticommutes() {
    let b = basis3();
    let dx = Form::basis_one_form(b, 0);
    let dy = Form::basis_one_form(b, 1);
    let xy = dx.wedge(&dy).unwrap();
    let yx = dy.wedge(&dx).unwrap();
    assert_eq!(xy, yx.neg());
    assert!(dx.wedge(&dx).unwrap().is_empty());
}

#[test]
fn interior_removes_slot_with_sign() {
    let b = basis3();
    let f = Form::monomial(b, 0b111, cx("x"));
    assert_eq!(f.interior_basis(1), Form::monomial(b, 0b101, cx("-x")));
    assert_eq!(f.interior_basis(0), Form::monomial(b, 0b110, cx("x")));
}

#[test]
fn real_area_form_is_pure_one_one() {
    let b = Basis::real(Coframe::Coordinate, 2);
    let area = Form::monomial(b, 0b11, CExpr::one());
    let c = area.to_complex_coordinate().unwrap();
    let parts = c.bidegree_split().unwrap();
    assert_eq!(parts.len(), 1);
    let (pq, f) = parts.iter().next().unwrap();
    assert_eq!(*pq, (1, 1));
    let half_i = CExpr::constant(Rational::from_integer(0.into()), Rational::new(1.into(), 2.into()));
    assert_eq!(f.coeff(0b11), half_i);
}

#[test]
fn bidegree_split_needs_complex_basis() {
    assert_eq!(
        Form::zero(basis3()).bidegree_split().unwrap_err(),
        Error::NotComplexScenario
    );
}

#[test]
fn mixing_coframes_is_rejected() {
    let a = Form::basis_one_form(basis3(), 0);
    let b = Form::basis_one_form(Basis::real(Coframe::Frame, 3), 0);
    assert_eq!(a.wedge(&b).unwrap_err(), Error::CoframeMismatch);
}

#[test]
fn conjugation_swaps_bidegree() {
    let b = Basis::complex(Coframe::Frame, 2);
    // w0 ^ w1 ^ wbar0 has type (2,1)
    let f = Form::monomial(b, 0b0111, CExpr::i());
    let g = f.conj();
    let (pq, _) = g.bidegree_split().unwrap().into_iter().next().unwrap();
    assert_eq!(pq, (1, 2));
    assert_eq!(g.conj(), f);
}

#[test]
fn orthonormal_star_squares_to_sign() {
    for n in 2..=6 {
        let b = Basis::real(Coframe::Frame, n);
        for mask in 0..(1u32 << n) {
            let k = mask.count_ones() as usize;
            let f = Form::monomial(b, mask, CExpr::one());
            let ss = f.hodge_star_orthonormal().unwrap().hodge_star_orthonormal().unwrap();
            let sign = if (k * (n - k)) % 2 == 0 { 1 } else { -1 };
            assert_eq!(ss, f.scale(&CExpr::int(sign)));
        }
    }
}

fn arb_coeff() -> impl Strategy<Value = CExpr> {
    prop_oneof![
        (-3i64..=3).prop_map(CExpr::int),
        (0usize..3, -2i64..=2).prop_map(|(i, k)| CExpr::real(Expr::coord(i).scale(&Rational::from_integer(k.into())))),
    ]
}

fn arb_form(n: usize) -> impl Strategy<Value = Form> {
    prop::collection::vec((0u32..(1 << n), arb_coeff()), 0..5)
        .prop_map(move |ts| Form::from_terms(Basis::real(Coframe::Frame, n), ts))
}

fn arb_homogeneous(n: usize) -> impl Strategy<Value = (usize, Form)> {
    (0usize..=n, arb_form(n)).prop_map(|(k, f)| (k, f.grade_part(k)))
}

fn spd(n: usize, seed: &[f64]) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |i, j| seed[(i * n + j) % seed.len()]);
    &a * a.transpose() + DMatrix::identity(n, n) * 0.5
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wedge_is_associative(a in arb_form(4), b in arb_form(4), c in arb_form(4)) {
        let l = a.wedge(&b).unwrap().wedge(&c).unwrap();
        let r = a.wedge(&b.wedge(&c).unwrap()).unwrap();
        prop_assert_eq!(l, r);
    }

    #[test]
    fn wedge_is_graded_commutative((p, a) in arb_homogeneous(4), (q, b) in arb_homogeneous(4)) {
        let ab = a.wedge(&b).unwrap();
        let ba = b.wedge(&a).unwrap();
        let s = if (p * q) % 2 == 0 { 1 } else { -1 };
        prop_assert_eq!(ab, ba.scale(&CExpr::int(s)));
    }

    #[test]
    fn interior_is_antiderivation((p, a) in arb_homogeneous(4), b in arb_form(4), v in prop::collection::vec(arb_coeff(), 4)) {
        let lhs = a.wedge(&b).unwrap().interior(&v).unwrap();
        let s = if p % 2 == 0 { 1 } else { -1 };
        let rhs = a.interior(&v).unwrap().wedge(&b).unwrap()
            .add(&a.wedge(&b.interior(&v).unwrap()).unwrap().scale(&CExpr::int(s))).unwrap();
        prop_assert_eq!(lhs.sub(&rhs).unwrap().is_zero(), Tri::Yes);
    }

    #[test]
    fn wedge_and_interior_are_adjoint(
        n in 2usize..=5,
        seed in prop::collection::vec(-1.0f64..1.0, 36),
        xi in prop::collection::vec(-1.0f64..1.0, 6),
        av in prop::collection::vec(-1.0f64..1.0, 64),
        bv in prop::collection::vec(-1.0f64..1.0, 64),
    ) {
        let g = spd(n, &seed);
        let fib = MetricFiber::new(g.clone(), 1.0).unwrap();
        let dim = 1 << n;
        let a = DVector::from_iterator(dim, av.iter().copied().take(dim));
        let b = DVector::from_iterator(dim, bv.iter().copied().take(dim));
        let xi = DVector::from_iterator(n, xi.iter().copied().take(n));
        // metric dual of xi in the frame
        let sharp = &g * &xi;
        let to_c = |v: &DVector<f64>| v.iter().map(|x| Complex64::new(*x, 0.0)).collect::<Vec<_>>();
        let eps = wedge_covector_matrix(n, &to_c(&xi)).map(|z| z.re);
        let iota = interior_vector_matrix(n, &to_c(&sharp)).map(|z| z.re);
        let lhs = fib.inner(&(&eps * &a), &b);
        let rhs = fib.inner(&a, &(&iota * &b));
        prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn star_squares_to_sign(n in 2usize..=6, seed in prop::collection::vec(-1.0f64..1.0, 36), k in 0usize..=6, av in prop::collection::vec(-1.0f64..1.0, 64)) {
        prop_assume!(k <= n);
        let fib = MetricFiber::new(spd(n, &seed), 1.0).unwrap();
        let dim = 1usize << n;
        let a = DVector::from_fn(dim, |i, _| if (i as u32).count_ones() as usize == k { av[i] } else { 0.0 });
        let ss = fib.hodge_star(&fib.hodge_star(&a).unwrap()).unwrap();
        let s = if (k * (n - k)) % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!((ss - a * s).amax() < 1e-10);
    }

    #[test]
    fn star_pairs_to_volume(n in 2usize..=5, seed in prop::collection::vec(-1.0f64..1.0, 36), av in prop::collection::vec(-1.0f64..1.0, 32), bv in prop::collection::vec(-1.0f64..1.0, 32), k in 0usize..=5) {
        prop_assume!(k <= n);
        let fib = MetricFiber::new(spd(n, &seed), 1.0).unwrap();
        let dim = 1usize << n;
        let pick = |v: &Vec<f64>| DVector::from_fn(dim, |i, _| if (i as u32).count_ones() as usize == k { v[i] } else { 0.0 });
        let (a, b) = (pick(&av), pick(&bv));
        let lhs = wedge_dense(n, &a, &fib.hodge_star(&b).unwrap());
        let rhs = fib.volume() * fib.inner(&a, &b);
        prop_assert!((lhs - rhs).amax() < 1e-10);
    }

    #[test]
    fn dense_matrices_match_symbolic((_, a) in arb_homogeneous(4), k in 0usize..4) {
        let b = a.basis();
        let pt = [0.3, -0.2, 0.9];
        let v = DVector::from_vec(a.eval(&pt).unwrap());
        let w = wedge_matrix(4, k) * &v;
        let sym = Form::basis_one_form(b, k).wedge(&a).unwrap().eval(&pt).unwrap();
        prop_assert!((w - DVector::from_vec(sym)).camax() < 1e-12);
        let i = interior_matrix(4, k) * &v;
        let sym = a.interior_basis(k).eval(&pt).unwrap();
        prop_assert!((i - DVector::from_vec(sym)).camax() < 1e-12);
    }
}
