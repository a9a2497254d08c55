use super::*;
use proptest::prelude::*;
use rand::Rng;

fn ctx() -> ParseContext {
    ParseContext::real(&["x", "u", "p"])
}

fn p(s: &str) -> Expr {
    parse_real(s, &ctx()).unwrap()
}

#[test]
fn differentiate_polynomial() {
    assert_eq!(p("x^2*u").diff(0).unwrap(), p("2*x*u"));
    assert_eq!(p("p").diff(2).unwrap(), Expr::one());
}

#[test]
fn differentiate_nonsmooth_leaf_fails() {
    let e = p("absRe(x)");
    assert_eq!(
        e.diff(0),
        Err(ExprError::NonSmoothDerivative("absRe".into()))
    );
    assert!(e.diff(1).unwrap().is_zero_structural());
}

#[test]
fn evaluate_examples() {
    assert_eq!(p("x^2 + 1").eval(&[2.0, 0.0, 0.0]).unwrap(), 5.0);
    assert_eq!(p("exp(0)").eval(&[]).unwrap(), 1.0);
    assert_eq!(p("absRe(x)").eval(&[-3.0]).unwrap(), 3.0);
}

#[test]
fn unbound_leaf_is_reported() {
    let e = p("mystery(x)");
    assert_eq!(e.eval(&[1.0]), Err(ExprError::UnboundLeaf("mystery".into())));
}

#[test]
fn overflow_is_non_finite() {
    assert_eq!(p("exp(x)").eval(&[1000.0]), Err(ExprError::NonFinite));
}

#[test]
fn zero_test_examples() {
    assert_eq!(p("x*u - u*x").is_zero(), Tri::Yes);
    assert_eq!(p("x").is_zero(), Tri::No);
    assert_ne!(p("sin(x)^2 + cos(x)^2 - 1").is_zero(), Tri::No);
    assert_eq!(p("sin(x) - cos(x)").is_zero(), Tri::No);
}

#[test]
fn zero_test_rational() {
    assert_eq!(p("1/(1 + x^2) + x^2/(1 + x^2) - 1").is_zero(), Tri::Yes);
    assert_eq!(p("x/(x + u) + u/(u + x) - 1").is_zero(), Tri::Yes);
    assert_eq!(p("1/(1 + x^2) - 1").is_zero(), Tri::No);
}

#[test]
fn exp_atoms_merge() {
    assert_eq!(p("exp(x)*exp(u)"), p("exp(x + u)"));
    assert_eq!(p("exp(x)*exp(-x)"), Expr::one());
    assert_eq!(p("exp(x)^3"), p("exp(3*x)"));
}

#[test]
fn factor_powers_cancel() {
    let h = Expr::factored(&p("1 + x^2"));
    let e = h.mul(&h.powi(-2).unwrap());
    assert_eq!(e, h.recip().unwrap());
}

#[test]
fn canonical_reduces_rational_functions() {
    assert_eq!(p("(x^2 - 1)/(x - 1)").canonical(), p("x + 1"));
    assert_eq!(
        p("(x*u + x)/(u^2 + 2*u + 1)").canonical(),
        p("x/(u + 1)").canonical()
    );
    assert_eq!(p("x/x").canonical(), Expr::one());
}

#[test]
fn rational_literals_are_exact() {
    assert_eq!(p("0.5*x"), p("x/2"));
    assert_eq!(p("1.25"), Expr::ratio(5, 4));
}

#[test]
fn display_round_trips() {
    let names: Vec<String> = ["x", "u", "p"].iter().map(|s| s.to_string()).collect();
    for s in [
        "x^2*u - 3/2*p + 7",
        "exp(x - u)*sin(p)",
        "x/(1 + x^2)",
        "absRe(x)*u^(-2)",
        "-x",
    ] {
        let e = p(s).canonical();
        let shown = e.display(&names).to_string();
        assert_eq!(p(&shown).canonical(), e, "{s} -> {shown}");
    }
}

#[test]
fn wirtinger_of_holomorphic_is_zero() {
    let c = ParseContext::complex(&["z", "w"]);
    let cc = ComplexCoords::interleaved(2);
    let e = parse_complex("z^3 + 2*i*z*w - w^2", &c).unwrap();
    let d = e.d_dzbar(&cc, 0).unwrap();
    assert_eq!(d.is_zero(), Tri::Yes);
    let dz = e.d_dz(&cc, 0).unwrap();
    let expect = parse_complex("3*z^2 + 2*i*w", &c).unwrap();
    assert_eq!(dz.sub(&expect).is_zero(), Tri::Yes);
    assert_eq!(e.conj().conj(), e);
}

#[test]
fn complex_exp_splits() {
    let c = ParseContext::complex(&["z"]);
    let e = parse_complex("exp(i*z)", &c).unwrap();
    let v = e.eval(&[0.3, -0.7]).unwrap();
    let z = num_complex::Complex64::new(0.3, -0.7);
    let w = (num_complex::Complex64::i() * z).exp();
    assert!((v - w).norm() < 1e-14);
}

#[test]
fn compiled_matches_direct() {
    let es = vec![p("x^2*u - exp(p)"), p("sin(x)/(1 + u^2)"), p("absRe(x - p)")];
    let c = CompiledExpr::new(&es).unwrap();
    let pt = [0.3, -1.1, 0.7];
    let got = c.eval(&pt).unwrap();
    for (e, g) in es.iter().zip(got) {
        assert!((e.eval(&pt).unwrap() - g).abs() < 1e-14);
    }
}

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0usize..3).prop_map(Expr::coord),
        (-3i64..=3).prop_map(Expr::int),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.add(&b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.mul(&b)),
            (inner.clone(), -2i64..=2).prop_map(|(a, k)| a.scale(&Rational::from_integer(k.into()))),
            (0usize..3, -2i64..=2)
                .prop_map(|(i, k)| Expr::exp(Expr::coord(i).scale(&Rational::from_integer(k.into())))),
            inner.clone().prop_map(|a| Expr::sin(a.scale(&Rational::new(1.into(), 4.into())))),
            (inner.clone(), 0usize..3).prop_map(|(a, i)| {
                let den = Expr::one().add(&Expr::coord(i).mul(&Expr::coord(i)));
                a.div(&Expr::factored(&den)).unwrap()
            }),
        ]
    })
}

fn arb_poly() -> impl Strategy<Value = Expr> {
    prop::collection::vec(((0u32..3, 0u32..3), -4i64..=4), 1..5).prop_map(|ts| {
        ts.into_iter().fold(Expr::zero(), |acc, ((a, b), c)| {
            let m = Expr::coord(0)
                .powi(a as i32)
                .unwrap()
                .mul(&Expr::coord(1).powi(b as i32).unwrap());
            acc.add(&m.scale(&Rational::from_integer(c.into())))
        })
    })
}

fn rand_point(seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..3).map(|_| rng.gen_range(-1.5..1.5)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn differentiate_is_linear(a in arb_expr(), b in arb_expr(), ka in -3i64..=3, kb in -3i64..=3, i in 0usize..3) {
        let (ra, rb) = (Rational::from_integer(ka.into()), Rational::from_integer(kb.into()));
        let lhs = a.scale(&ra).add(&b.scale(&rb)).diff(i).unwrap();
        let rhs = a.diff(i).unwrap().scale(&ra).add(&b.diff(i).unwrap().scale(&rb));
        prop_assert_eq!(lhs.sub(&rhs).is_zero(), Tri::Yes);
    }

    #[test]
    fn differentiate_obeys_leibniz(a in arb_expr(), b in arb_expr(), i in 0usize..3) {
        let lhs = a.mul(&b).diff(i).unwrap();
        let rhs = a.diff(i).unwrap().mul(&b).add(&a.mul(&b.diff(i).unwrap()));
        prop_assert_eq!(lhs.sub(&rhs).is_zero(), Tri::Yes);
    }

    #[test]
    fn derivative_matches_central_differences(a in arb_expr(), i in 0usize..3, seed in 0u64..1000) {
        let d = a.diff(i).unwrap();
        let x = rand_point(seed);
        let h = 1e-5;
        let (mut xp, mut xm) = (x.clone(), x.clone());
        xp[i] += h;
        xm[i] -= h;
        let fd = (a.eval(&xp).unwrap() - a.eval(&xm).unwrap()) / (2.0 * h);
        let exact = d.eval(&x).unwrap();
        prop_assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1.0), "fd {} exact {}", fd, exact);
    }

    #[test]
    fn evaluate_is_deterministic(a in arb_expr(), seed in 0u64..1000) {
        let x = rand_point(seed);
        let v1 = a.eval(&x).unwrap();
        let v2 = a.eval(&x).unwrap();
        prop_assert_eq!(v1.to_bits(), v2.to_bits());
    }

    #[test]
    fn canonical_is_idempotent(a in arb_expr()) {
        let c = a.canonical();
        prop_assert_eq!(c.canonical(), c);
    }

    #[test]
    fn canonical_preserves_value(a in arb_expr(), seed in 0u64..1000) {
        let x = rand_point(seed);
        let v = a.eval(&x).unwrap();
        let w = a.canonical().eval(&x).unwrap();
        prop_assert!((v - w).abs() <= 1e-9 * v.abs().max(1.0));
    }

    #[test]
    fn equal_rational_functions_canonicalize_identically(a in arb_poly(), b in arb_poly(), c in arb_poly()) {
        prop_assume!(!c.is_zero_structural() && !b.is_zero_structural());
        // a/c + b/c against (a + b)/c
        let lhs = a.div(&c).unwrap().add(&b.div(&c).unwrap());
        let rhs = a.add(&b).div(&c).unwrap();
        prop_assert_eq!(lhs.canonical(), rhs.canonical());
        // (a c)/(b c) against a/b
        let lhs = a.mul(&c).div(&b.mul(&c)).unwrap();
        let rhs = a.div(&b).unwrap();
        prop_assert_eq!(lhs.canonical(), rhs.canonical());
    }

    #[test]
    fn compiled_evaluation_agrees(a in arb_expr(), seed in 0u64..1000) {
        let x = rand_point(seed);
        let c = CompiledExpr::new(std::slice::from_ref(&a)).unwrap();
        let v = a.eval(&x).unwrap();
        let w = c.eval(&x).unwrap()[0];
        prop_assert!((v - w).abs() <= 1e-12 * v.abs().max(1.0));
    }
}
