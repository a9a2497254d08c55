//! Weak harmonicity by quadrature: pairings of a witness against `d_Q` of
//! compactly supported test forms, and the L² adjointness of `d_Q`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::witness::{volume_density, WeakHarmonicWitness};
use super::{thread_pool, AxisRule, SeparableIntegrator};
use crate::charops::{build_characteristic_ops, mat_apply, CharacteristicOps, FrameMetric};
use crate::error::{Error, Result};
use crate::exterior::{grade, Form, Mask};
use crate::framedgeom::{sample_points, Scenario};
use crate::symexpr::{CExpr, Expr, Leaf, Rational};

type C = Complex64;

/// Pass tolerance on normalized pairings.
pub const PAIRING_TOL: f64 = 1e-6;
/// Smallest acceptable control pairing.
pub const CONTROL_MIN: f64 = 1e-2;

/// Volume density on the real slots: a constant when it is one, otherwise
/// a numeric leaf.
#[derive(Clone)]
pub(crate) enum Density {
    Const(f64),
    Leaf(Expr),
}

impl Density {
    pub(crate) fn new(s: &Scenario, fm: &FrameMetric) -> Result<Density> {
        let pts = sample_points(s, 12);
        let r0 = volume_density(s, fm, &pts[0])?;
        let mut constant = true;
        for x in &pts[1..] {
            if (volume_density(s, fm, x)? - r0).abs() > 1e-12 * r0.abs().max(1.0) {
                constant = false;
                break;
            }
        }
        if constant {
            return Ok(Density::Const(r0));
        }
        // only the slots the metric and frame depend on
        let n = s.n();
        let slots: Vec<usize> = (0..n)
            .filter(|i| {
                fm.g.iter().any(|g| g.depends_on(*i)) || s.real_coeffs().iter().flatten().any(|c| c.depends_on(*i))
            })
            .collect();
        let (s2, fm2, sl) = (s.clone(), fm.clone(), slots.clone());
        let eval = move |args: &[f64]| {
            let mut x = vec![0.0; n];
            for (v, i) in args.iter().zip(&sl) {
                x[*i] = *v;
            }
            volume_density(&s2, &fm2, &x).unwrap_or(f64::NAN)
        };
        let args = slots.into_iter().map(Expr::coord).collect();
        Ok(Density::Leaf(Expr::leaf(Leaf::new("density", args, std::sync::Arc::new(eval)))))
    }
}

/// `sum_I a_I conj(b_I) H_I`, times the density when it is not constant.
fn inner_integrand(a: &Form, b: &Form, fm: &FrameMetric, rho: &Density) -> CExpr {
    let mut acc = CExpr::zero();
    for (mask, ca) in a.terms() {
        let cb = b.coeff(*mask);
        if cb.is_zero_structural() {
            continue;
        }
        acc = acc.add(&ca.mul(&cb.conj()).scale_real(&fm.h(*mask)));
    }
    if let Density::Leaf(l) = rho {
        acc = acc.scale_real(l);
    }
    acc
}

fn inner(si: &SeparableIntegrator, a: &Form, b: &Form, fm: &FrameMetric, rho: &Density) -> Result<C> {
    let v = si.integrate_c(&inner_integrand(a, b, fm, rho))?;
    Ok(match rho {
        Density::Const(r) => v * *r,
        Density::Leaf(_) => v,
    })
}

/// Support box of a product bump, with dyadic center and half widths.
#[derive(Debug, Clone)]
pub struct Bump {
    pub center: Vec<f64>,
    pub half: Vec<f64>,
}

impl Bump {
    pub fn random(s: &Scenario, rng: &mut ChaCha8Rng) -> Bump {
        let mut center = Vec::with_capacity(s.n());
        let mut half = Vec::with_capacity(s.n());
        for (lo, hi) in &s.bounds {
            let len = hi - lo;
            let h = 0.5 * len * rng.gen_range(22..=31) as f64 / 32.0;
            let c = lo + h + (len - 2.0 * h) * rng.gen_range(0..=64) as f64 / 64.0;
            center.push(c);
            half.push(h);
        }
        Bump { center, half }
    }

    /// `prod_i exp(-1 / (1 - s_i^2))`, `s_i = (x_i - c_i) / h_i`.
    pub fn expr(&self) -> Expr {
        let mut arg = Expr::zero();
        for (i, (c, h)) in self.center.iter().zip(&self.half).enumerate() {
            let h2 = Expr::constant(Rational::from_float(h * h).expect("finite"));
            let d = Expr::coord(i).sub(&Expr::constant(Rational::from_float(*c).expect("finite")));
            let den = h2.sub(&d.mul(&d)).recip().expect("nonzero polynomial");
            arg = arg.sub(&den.mul(&h2));
        }
        Expr::exp(arg)
    }

    pub fn rules(&self, nodes: usize, kinks: &[Vec<f64>]) -> Vec<AxisRule> {
        self.center
            .iter()
            .zip(&self.half)
            .enumerate()
            .map(|(i, (c, h))| {
                let breaks = kinks.get(i).map(Vec::as_slice).unwrap_or(&[]);
                AxisRule::new(c - h, c + h, nodes, breaks)
            })
            .collect()
    }
}

/// `pi_Q` of a degree-`k` form with random affine coefficients times `psi`.
pub fn random_q_form(s: &Scenario, ops: &CharacteristicOps, k: usize, psi: &Expr, rng: &mut ChaCha8Rng) -> Form {
    let basis = s.basis();
    let mut f = Form::zero(basis);
    for mask in 0..basis.dim() as Mask {
        if grade(mask) != k {
            continue;
        }
        let mut re = Expr::int(rng.gen_range(-3..=3));
        let mut im = Expr::int(rng.gen_range(-3..=3));
        for i in 0..s.n() {
            re = re.add(&Expr::coord(i).scale(&Rational::new(rng.gen_range(-4..=4).into(), 4.into())));
            im = im.add(&Expr::coord(i).scale(&Rational::new(rng.gen_range(-4..=4).into(), 4.into())));
        }
        if !s.is_complex() {
            im = Expr::zero();
        }
        f.add_term(mask, CExpr::new(re.mul(psi), im.mul(psi)));
    }
    mat_apply(&ops.pi_q, &f)
}

fn q_has_degree(ops: &CharacteristicOps, k: usize) -> bool {
    ops.pi_q.keys().any(|(_, c)| grade(*c) == k)
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialResult {
    /// Degree of the test form.
    pub test_degree: usize,
    pub pairing: f64,
    pub control: f64,
    /// Change of the pairing when the node count is doubled.
    pub refinement_change: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WeakHarmonicReport {
    pub kind: String,
    pub trials: usize,
    pub nodes: usize,
    pub max_pairing: f64,
    pub min_control: f64,
    pub max_control: f64,
    pub max_refinement_change: f64,
    pub q_residual: f64,
    pub per_trial: Vec<TrialResult>,
    pub passed: bool,
}

struct TestForm {
    degree: usize,
    bump: Bump,
    mu: Form,
    /// `d_Q mu` or `d_Q* mu`.
    image: Form,
}

fn test_form(s: &Scenario, ops: &CharacteristicOps, degree: usize, seed: u64, trial: usize) -> Result<TestForm> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (trial as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let bump = Bump::random(s, &mut rng);
    let psi = bump.expr();
    let lower = degree > 0 && q_has_degree(ops, degree - 1);
    let upper = q_has_degree(ops, degree + 1);
    let use_lower = lower && (!upper || trial % 2 == 0);
    let (k, image) = if use_lower {
        let mu = random_q_form(s, ops, degree - 1, &psi, &mut rng);
        let img = ops.d_q.apply(s, &mu)?;
        (degree - 1, (mu, img))
    } else if upper {
        let mu = random_q_form(s, ops, degree + 1, &psi, &mut rng);
        let img = ops.d_q_star.apply(s, &mu)?;
        (degree + 1, (mu, img))
    } else {
        return Err(Error::KindMismatch(format!("Q has no degree adjacent to {degree}")));
    };
    Ok(TestForm {
        degree: k,
        bump,
        mu: image.0,
        image: image.1,
    })
}

/// `|<w, d_Q mu>| / |mu|` for `trials` bump test forms, with a control run
/// and a node-doubling check.
pub fn weak_harmonicity_verify(w: &WeakHarmonicWitness, s: &Scenario, trials: usize) -> Result<WeakHarmonicReport> {
    let ops = build_characteristic_ops(s)?;
    verify_with_ops(w, s, &ops, trials)
}

pub fn verify_with_ops(
    w: &WeakHarmonicWitness,
    s: &Scenario,
    ops: &CharacteristicOps,
    trials: usize,
) -> Result<WeakHarmonicReport> {
    let fm = &ops.metric;
    let rho = Density::new(s, fm)?;
    let n = w.quadrature.nodes;
    let q_residual = super::witness::q_residual(s, &ops.pi_q, &w.form, 3)?;
    let run = |t: usize| -> Result<TrialResult> {
        let tf = test_form(s, ops, w.degree, s.seed, t)?;
        let mut vals = Vec::with_capacity(2);
        let mut control = 0.0;
        for nodes in [n, 2 * n] {
            let si = SeparableIntegrator::new(tf.bump.rules(nodes, &w.quadrature.kinks));
            let norm = inner(&si, &tf.mu, &tf.mu, fm, &rho)?.re.sqrt();
            let p = inner(&si, &w.form, &tf.image, fm, &rho)?.norm() / norm;
            if nodes == n {
                control = inner(&si, &w.control, &tf.image, fm, &rho)?.norm() / norm;
            }
            vals.push(p);
        }
        Ok(TrialResult {
            test_degree: tf.degree,
            pairing: vals[0],
            control,
            refinement_change: (vals[1] - vals[0]).abs(),
        })
    };
    let per_trial: Vec<TrialResult> = thread_pool()
        .install(|| (0..trials).into_par_iter().map(run).collect::<Result<Vec<_>>>())?;
    let max_pairing = per_trial.iter().map(|t| t.pairing).fold(0.0, f64::max);
    let max_refinement_change = per_trial.iter().map(|t| t.refinement_change).fold(0.0, f64::max);
    if max_refinement_change > 10.0 * PAIRING_TOL {
        let worst = per_trial
            .iter()
            .max_by(|a, b| a.refinement_change.total_cmp(&b.refinement_change))
            .expect("nonempty");
        return Err(Error::QuadratureUnstable {
            coarse: worst.pairing,
            fine: worst.pairing + worst.refinement_change,
        });
    }
    let min_control = per_trial.iter().map(|t| t.control).fold(f64::INFINITY, f64::min);
    let max_control = per_trial.iter().map(|t| t.control).fold(0.0, f64::max);
    let passed = max_pairing < PAIRING_TOL && max_control > CONTROL_MIN && q_residual < 1e-10;
    Ok(WeakHarmonicReport {
        kind: w.kind.name().to_string(),
        trials,
        nodes: n,
        max_pairing,
        min_control,
        max_control,
        max_refinement_change,
        q_residual,
        per_trial,
        passed,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AdjointnessReport {
    pub trials: usize,
    pub nodes: usize,
    /// `max |<d_Q u, v> - <u, d_Q* v>| / (|u| |v|)`.
    pub max_defect: f64,
}

/// L² adjointness of `d_Q` and `d_Q*` on pairs of bump forms sharing a
/// support box.
pub fn l2_adjointness(s: &Scenario, ops: &CharacteristicOps, trials: usize, nodes: usize) -> Result<AdjointnessReport> {
    let fm = &ops.metric;
    let rho = Density::new(s, fm)?;
    let degrees: Vec<usize> = (0..s.n()).filter(|k| q_has_degree(ops, *k) && q_has_degree(ops, k + 1)).collect();
    if degrees.is_empty() {
        return Ok(AdjointnessReport { trials: 0, nodes, max_defect: 0.0 });
    }
    let run = |t: usize| -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(s.seed ^ 0xad70 ^ (t as u64) << 16);
        let k = degrees[t % degrees.len()];
        let bump = Bump::random(s, &mut rng);
        let psi = bump.expr();
        let u = random_q_form(s, ops, k, &psi, &mut rng);
        let v = random_q_form(s, ops, k + 1, &psi, &mut rng);
        let du = ops.d_q.apply(s, &u)?;
        let dsv = ops.d_q_star.apply(s, &v)?;
        let si = SeparableIntegrator::new(bump.rules(nodes, &[]));
        let lhs = inner(&si, &du, &v, fm, &rho)?;
        let rhs = inner(&si, &u, &dsv, fm, &rho)?;
        let nu = inner(&si, &u, &u, fm, &rho)?.re.sqrt();
        let nv = inner(&si, &v, &v, fm, &rho)?.re.sqrt();
        Ok((lhs - rhs).norm() / (nu * nv))
    };
    let defects = thread_pool().install(|| (0..trials).into_par_iter().map(run).collect::<Result<Vec<_>>>())?;
    Ok(AdjointnessReport {
        trials,
        nodes,
        max_defect: defects.into_iter().fold(0.0, f64::max),
    })
}
