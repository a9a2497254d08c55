//! Exit gate: one PASS/FAIL line per criterion. Runs without the test
//! harness so the lines are always printed.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;

use charlap_core::casebook::{
    build_witness, builtin_names, l2_adjointness, load_scenario, obstruction_residuals, structure_residuals,
    symbol_residuals, verify_with_ops, WitnessKind,
};
use charlap_core::charops::{build_characteristic_ops, closed_form_symbols, covector_data, hoermander_applicability, symbol_oracle};
use charlap_core::framedgeom::{bracket_generating, fiber_projectors, sample_points};
use charlap_core::hermitian::{
    hermitian_data, involutivity_verdict, kaehler_check, normal_bracket_matrix, normal_covector, obstruction_symbol,
    sub_kaehler_residual, ProjectorJet,
};
use charlap_core::{Error, Result, Tri};

type C = Complex64;

const SYMBOL_REL_TOL: f64 = 1e-8;
const SYMBOL_TIME: Duration = Duration::from_secs(60);
const EXPLICIT_SYMBOL_TOL: f64 = 1e-12;
const PAIRING_TOL: f64 = 1e-6;
const CONTROL_MIN: f64 = 1e-2;
const WITNESS_TRIALS: usize = 100;
const WITNESS_NODES: usize = 48;
const WITNESS_TIME: Duration = Duration::from_secs(300);
const TORSION_TOL: f64 = 1e-9;
const BIGRADING_TOL: f64 = 1e-8;
const BIGRADING_WITNESS_MIN: f64 = 1e-3;
const BRACKET_STRUCTURE_TOL: f64 = 1e-8;
const ORDER1_TOL: f64 = 1e-6;
const ORDER2_TOL: f64 = 1e-9;
const IDENTITY_TOL: f64 = 1e-6;
const KAEHLER_CORRECTION_TOL: f64 = 1e-10;
const STRUCTURE_TOL: f64 = 1e-9;
const SANDWICH_TOL: f64 = 1e-10;
const ADJOINT_TOL: f64 = 1e-6;
const ADJOINT_NODES: usize = 48;

const HEISENBERG: [&str; 3] = ["real-heisenberg-contact", "complex-heisenberg-standard", "complex-heisenberg-invariant"];
const COMPLEX: [&str; 5] = [
    "involutive-product-complex",
    "flat-kaehler",
    "nonkaehler-hermitian",
    "complex-heisenberg-standard",
    "complex-heisenberg-invariant",
];

/// Result of one criterion: verdict plus a short account of the numbers.
struct Outcome {
    ok: bool,
    detail: Vec<String>,
}

impl Outcome {
    fn new() -> Outcome {
        Outcome { ok: true, detail: Vec::new() }
    }

    fn require(&mut self, ok: bool, what: String) {
        self.ok &= ok;
        self.detail.push(if ok { what } else { format!("FAILED {what}") });
    }
}

fn symbol_equivalence() -> Result<Outcome> {
    let mut out = Outcome::new();
    for name in HEISENBERG {
        let t = Instant::now();
        let s = load_scenario(name)?;
        let ops = build_characteristic_ops(&s)?;
        let r = symbol_residuals(&s, &ops, 100)?;
        let dt = t.elapsed();
        out.require(
            r.pairs >= 100 && r.laplacian < SYMBOL_REL_TOL && dt < SYMBOL_TIME,
            format!("{name}: {} pairs, rel err {:.1e}, {:.1?}", r.pairs, r.laplacian, dt),
        );
    }
    Ok(out)
}

fn explicit_contact_symbol() -> Result<Outcome> {
    let mut out = Outcome::new();
    let s = load_scenario("real-heisenberg-contact")?;
    let ops = build_characteristic_ops(&s)?;
    let oracle = symbol_oracle(&s, &ops.laplacian, 2)?;
    let covectors = [[0.6, -0.8, 0.25], [1.0, 0.5, -2.0], [-0.375, 0.125, 0.75], [2.0, 3.0, 0.0]];
    let points = [[0.0, 0.0, 0.0], [0.5, -0.25, 0.125], [-0.75, 0.5, -0.5]];
    let (mut worst_closed, mut worst_oracle): (f64, f64) = (0.0, 0.0);
    let mut fibers = Vec::new();
    for x in &points {
        let fd = fiber_projectors(&s, x)?;
        for xi in &covectors {
            let cv = covector_data(&s, &fd, xi)?;
            let (a, b) = (cv.xi[0], cv.xi[1]);
            let want = [[a * a, a * b], [a * b, b * b]];
            let closed = closed_form_symbols(&s, &fd, xi)?.laplacian;
            let from_oracle: DMatrix<C> = &fd.to_ortho * oracle.eval(x, xi)? * &fd.from_ortho;
            for (r, row) in want.iter().enumerate() {
                for (c, w) in row.iter().enumerate() {
                    worst_closed = worst_closed.max((closed[(1 << r, 1 << c)] - w).norm());
                    worst_oracle = worst_oracle.max((from_oracle[(1 << r, 1 << c)] - w).norm());
                }
            }
        }
        fibers.push(fd);
    }
    out.require(worst_closed < EXPLICIT_SYMBOL_TOL, format!("closed form off by {worst_closed:.1e}"));
    out.require(worst_oracle < EXPLICIT_SYMBOL_TOL, format!("oracle off by {worst_oracle:.1e}"));
    let xis: Vec<Vec<f64>> = covectors.iter().map(|v| v.to_vec()).collect();
    let h = hoermander_applicability(&s, &fibers, &xis)?;
    out.require(
        !h.applicable && h.witness.is_some(),
        format!("Hoermander applicable = {}, witness grade {:?}", h.applicable, h.witness.as_ref().map(|w| w.0)),
    );
    Ok(out)
}

fn witnesses() -> Result<Outcome> {
    let mut out = Outcome::new();
    for name in HEISENBERG {
        let t = Instant::now();
        let s = load_scenario(name)?;
        let ops = build_characteristic_ops(&s)?;
        let mut w = build_witness(&s, WitnessKind::for_scenario(&s))?;
        w.quadrature.nodes = WITNESS_NODES;
        let r = verify_with_ops(&w, &s, &ops, WITNESS_TRIALS)?;
        let dt = t.elapsed();
        out.require(
            r.trials == WITNESS_TRIALS
                && r.nodes == WITNESS_NODES
                && r.max_pairing < PAIRING_TOL
                && r.min_control > CONTROL_MIN
                && dt < WITNESS_TIME,
            format!(
                "{name} ({}): max pairing {:.1e}, min control {:.2e}, {:.1?}",
                w.kind.name(),
                r.max_pairing,
                r.min_control,
                dt
            ),
        );
    }
    Ok(out)
}

fn kaehler_both_directions() -> Result<Outcome> {
    let mut out = Outcome::new();
    let r = kaehler_check(&load_scenario("flat-kaehler")?, 20, 8)?;
    out.require(
        r.d_theta_zero == Tri::Yes && r.torsion_symbol_max < TORSION_TOL && r.bigrading_max < BIGRADING_TOL && r.consistent,
        format!("flat-kaehler: torsion {:.1e}, bigrading {:.1e}", r.torsion_symbol_max, r.bigrading_max),
    );
    let r = kaehler_check(&load_scenario("nonkaehler-hermitian")?, 20, 8)?;
    out.require(
        r.d_theta_zero == Tri::No
            && r.bigrading_max > BIGRADING_WITNESS_MIN
            && r.bigrading_witness.is_some()
            && r.torsion_symbol_max > TORSION_TOL
            && r.torsion_witness.is_some()
            && r.consistent,
        format!("nonkaehler-hermitian: torsion {:.2e}, bigrading {:.2e}", r.torsion_symbol_max, r.bigrading_max),
    );
    Ok(out)
}

fn involutivity() -> Result<Outcome> {
    let mut out = Outcome::new();
    for (name, expected) in [
        ("complex-heisenberg-standard", false),
        ("complex-heisenberg-invariant", false),
        ("involutive-product-complex", true),
        ("flat-kaehler", true),
    ] {
        let s = load_scenario(name)?;
        let v = involutivity_verdict(&s, &hermitian_data(&s)?, 8)?;
        out.require(
            v.bigrading_preserved == expected && v.consistent && v.witness.is_none() == expected,
            format!("{name}: {}", v.bigrading_preserved),
        );
    }
    for name in ["complex-heisenberg-standard", "complex-heisenberg-invariant"] {
        let s = load_scenario(name)?;
        let hd = hermitian_data(&s)?;
        let m = s.m().expect("complex");
        let mut worst: f64 = 0.0;
        let mut smallest = f64::INFINITY;
        for x in sample_points(&s, 6) {
            let fd = fiber_projectors(&s, &x)?;
            let jet = ProjectorJet::from_fiber(&s, &fd, 1e-5)?;
            for val in [C::new(1.0, 0.0), C::new(0.3, -0.8), C::new(-0.5, 0.25)] {
                let vals: Vec<(usize, C)> = fd.n_hol().into_iter().map(|a| (a, val)).collect();
                let xi = normal_covector(&s, &fd, &vals)?;
                let sym = obstruction_symbol(&s, &hd, &jet, &fd, &xi)?;
                for (j, expected) in normal_bracket_matrix(&s, &fd, &xi)? {
                    let col = sym.column(1 << (m + j)).into_owned();
                    worst = worst.max((&col - &expected).norm());
                    smallest = smallest.min(expected.norm());
                }
            }
        }
        out.require(
            worst < BRACKET_STRUCTURE_TOL && smallest > 0.0,
            format!("{name}: bracket structure off by {worst:.1e}"),
        );
    }
    Ok(out)
}

fn obstruction_formula() -> Result<Outcome> {
    let mut out = Outcome::new();
    for name in COMPLEX {
        let s = load_scenario(name)?;
        let ops = build_characteristic_ops(&s)?;
        let r = obstruction_residuals(&s, &ops, 100)?;
        out.require(
            r.pairs >= 100 && r.order1 < ORDER1_TOL && r.order2 < ORDER2_TOL,
            format!("{name}: order 1 {:.1e}, order 2 {:.1e}", r.order1, r.order2),
        );
    }
    Ok(out)
}

fn sub_kaehler() -> Result<Outcome> {
    let mut out = Outcome::new();
    for name in COMPLEX {
        let r = sub_kaehler_residual(&load_scenario(name)?, 50, 20)?;
        let mut ok = r.points >= 50 && r.forms >= 20 && r.max_residual < IDENTITY_TOL;
        if name == "flat-kaehler" {
            ok &= r.max_correction < KAEHLER_CORRECTION_TOL;
        }
        out.require(ok, format!("{name}: residual {:.1e}, correction {:.1e}", r.max_residual, r.max_correction));
    }
    Ok(out)
}

fn structural_identities() -> Result<Outcome> {
    let mut out = Outcome::new();
    for name in builtin_names() {
        let s = load_scenario(name)?;
        let ops = build_characteristic_ops(&s)?;
        let r = structure_residuals(&s, &ops, 8)?;
        let a = l2_adjointness(&s, &ops, 4, ADJOINT_NODES)?;
        let ok = r.d_squared_zero == Tri::Yes
            && r.d_q_squared < STRUCTURE_TOL
            && r.projected_d < STRUCTURE_TOL
            && r.projected_d_star < STRUCTURE_TOL
            && r.sandwich.is_none_or(|v| v < SANDWICH_TOL)
            && a.trials > 0
            && a.max_defect < ADJOINT_TOL;
        out.require(
            ok,
            format!(
                "{name}: dQ^2 {:.0e}, proj {:.0e}/{:.0e}, sandwich {}, adjoint {:.0e}",
                r.d_q_squared,
                r.projected_d,
                r.projected_d_star,
                r.sandwich.map(|v| format!("{v:.0e}")).unwrap_or_else(|| "n/a".into()),
                a.max_defect
            ),
        );
    }
    Ok(out)
}

fn bracket_generation() -> Result<Outcome> {
    let mut out = Outcome::new();
    let r = bracket_generating(&load_scenario("real-heisenberg-contact")?, 4)?;
    out.require(r.step == 2, format!("real-heisenberg-contact step {}", r.step));
    for name in ["complex-heisenberg-standard", "complex-heisenberg-invariant"] {
        let r = bracket_generating(&load_scenario(name)?, 4);
        out.require(r.is_ok(), format!("{name} generating {}", r.is_ok()));
    }
    for name in ["involutive-product", "involutive-product-complex"] {
        let r = bracket_generating(&load_scenario(name)?, 4);
        let not = matches!(r, Err(Error::MaxDepthExceeded { .. }));
        out.require(not, format!("{name} generating {}", !not));
    }
    Ok(out)
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Result<Outcome>); 9] = [
        ("symbol oracle equals closed-form Laplacian symbol", symbol_equivalence),
        ("explicit contact symbol and Hoermander verdict", explicit_contact_symbol),
        ("non-smooth witnesses are weakly harmonic", witnesses),
        ("Kaehler verdicts in both directions", kaehler_both_directions),
        ("involutivity verdicts and bracket structure", involutivity),
        ("obstruction symbol formula", obstruction_formula),
        ("generalized sub-Kaehler identity", sub_kaehler),
        ("structural identities", structural_identities),
        ("bracket generation", bracket_generation),
    ];
    let mut all = true;
    for (i, (title, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (ok, detail) = match run() {
            Ok(o) => (o.ok, o.detail.join("; ")),
            Err(e) => (false, format!("error: {e}")),
        };
        all &= ok;
        println!(
            "criterion {}: {} - {title} [{:.1?}] {detail}",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            t.elapsed()
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
