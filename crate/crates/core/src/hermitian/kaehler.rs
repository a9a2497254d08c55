//! Kähler diagnostic in the classical case `W = TX`: three independent
//! verdicts that must agree.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::HermitianData;
use crate::casebook::{AxisRule, TensorGrid};
use crate::charops::{codifferential, exterior_d, FrameMetric, OperatorField};
use crate::error::{Error, Result};
use crate::exterior::{wedge_covector_matrix, Form, Mask};
use crate::framedgeom::{fiber_projectors, sample_covectors, sample_points, FiberData, Scenario};
use crate::symexpr::{CExpr, CompiledCExpr, Expr, Rational, Tri};

type C = Complex64;

/// Symbol of `[delbar*, T]` at a fiber in the orthonormal coframe:
/// `sum_{i,j,k} xi(u_i) delTheta(u_j, u_k, conj u_i) u^k ∧ i_{conj u_j}`.
pub fn torsion_symbol(hd: &HermitianData, fd: &FiberData, xi_u: &[C]) -> Result<DMatrix<C>> {
    let m = hd.m;
    let n = fd.n;
    let dt = hd.d_theta_at(fd)?;
    let dim = fd.dim();
    let mut out = DMatrix::zeros(dim, dim);
    let unit = |k: usize| {
        let mut v = vec![C::new(0.0, 0.0); n];
        v[k] = C::new(1.0, 0.0);
        v
    };
    for j in 0..m {
        let iota = wedge_covector_matrix(n, &unit(m + j)).transpose();
        for k in 0..m {
            let mut coef = C::new(0.0, 0.0);
            for (i, xi) in xi_u.iter().take(m).enumerate() {
                coef += xi * dt[j][k][i];
            }
            if coef.norm() == 0.0 {
                continue;
            }
            out += wedge_covector_matrix(n, &unit(k)) * &iota * coef;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct KaehlerReport {
    /// (a) whether `del Theta` vanishes identically.
    pub d_theta_zero: Tri,
    /// (b) largest norm of the torsion symbol over sampled `(x, xi)`.
    pub torsion_symbol_max: f64,
    pub torsion_witness: Option<(Vec<f64>, Vec<f64>)>,
    /// (c) largest relative L2 mass of the off-type part of the Hodge
    /// Laplacian applied to pure-type bump forms.
    pub bigrading_max: f64,
    /// Bidegree and index of the form attaining it.
    pub bigrading_witness: Option<((usize, usize), usize)>,
    pub is_kaehler: Tri,
    pub consistent: bool,
}

pub const TORSION_SYMBOL_TOL: f64 = 1e-9;
pub const BIGRADING_TOL: f64 = 1e-8;

/// Polynomial cutoff `prod (1 - s_i^2)` vanishing on the box boundary.
pub(crate) fn box_cutoff(s: &Scenario) -> Expr {
    let mut acc = Expr::one();
    for (i, (lo, hi)) in s.bounds.iter().enumerate() {
        let c = rational(0.5 * (lo + hi));
        let h = rational(0.5 * (hi - lo));
        let si = Expr::coord(i).sub(&Expr::constant(c)).scale(&h.recip());
        let one_minus = Expr::one().sub(&si.mul(&si));
        acc = acc.mul(&one_minus);
    }
    acc
}

fn rational(x: f64) -> Rational {
    Rational::from_float(x).expect("finite box bounds")
}

/// Random affine coefficient with small rational entries.
pub(crate) fn random_affine(rng: &mut ChaCha8Rng, slots: usize) -> CExpr {
    let mut re = Expr::int(rng.gen_range(-3..=3));
    let mut im = Expr::int(rng.gen_range(-3..=3));
    for i in 0..slots {
        re = re.add(&Expr::coord(i).scale(&Rational::new(rng.gen_range(-4..=4).into(), 4.into())));
        im = im.add(&Expr::coord(i).scale(&Rational::new(rng.gen_range(-4..=4).into(), 4.into())));
    }
    CExpr::new(re, im)
}

fn pure_form(s: &Scenario, rng: &mut ChaCha8Rng, pq: (usize, usize), cutoff: &Expr) -> Form {
    let basis = s.basis();
    let mut f = Form::zero(basis);
    for mask in 0..basis.dim() as Mask {
        if basis.bidegree(mask) == pq {
            let c = random_affine(rng, s.n());
            f.add_term(mask, c.scale_real(cutoff));
        }
    }
    f.canonical()
}

/// Weighted pointwise norm squared with `H_I = prod 1/g_i`.
fn weighted_norm2(vals: &[C], masks: &[Mask], g: &[f64]) -> f64 {
    vals.iter()
        .zip(masks)
        .map(|(v, mask)| {
            let h: f64 = g.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, gi)| 1.0 / gi).product();
            v.norm_sqr() * h
        })
        .sum()
}

/// Runs the three verdicts on a classical-case complex scenario.
pub fn kaehler_check(s: &Scenario, sample_forms: usize, sample_pts: usize) -> Result<KaehlerReport> {
    let m = s.m().ok_or(Error::NotComplexScenario)?;
    if s.distribution.len() != s.n() {
        return Err(Error::WrongDistribution(format!(
            "the Kähler diagnostic needs W = TX, got rank {} of {}",
            s.distribution.len() / 2,
            m
        )));
    }
    let hd = super::hermitian_data(s)?;

    // (a)
    let d_theta_zero = hd.d_theta.is_zero();

    // (b)
    let mut torsion_symbol_max: f64 = 0.0;
    let mut torsion_witness = None;
    let covectors = sample_covectors(s.n(), 6, s.seed ^ 0x7a);
    for x in sample_points(s, sample_pts) {
        let fd = fiber_projectors(s, &x)?;
        for xi in &covectors {
            let xi_u = fd.covector(s, xi)?;
            let size = torsion_symbol(&hd, &fd, &xi_u)?.norm();
            if size > torsion_symbol_max {
                torsion_symbol_max = size;
                if size > TORSION_SYMBOL_TOL {
                    torsion_witness = Some((x.clone(), xi.clone()));
                }
            }
        }
    }

    // (c)
    let fm = FrameMetric::new(s)?;
    let d = Arc::new(exterior_d(s)?);
    let ds = Arc::new(codifferential(s, &fm)?);
    let lap = OperatorField {
        name: "hodge_laplacian".into(),
        order: 2,
        basis: s.basis(),
        terms: vec![(CExpr::one(), vec![d.clone(), ds.clone()]), (CExpr::one(), vec![ds, d])],
    };
    let cutoff = box_cutoff(s);
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed ^ 0xb16);
    let types: Vec<(usize, usize)> = (0..=m)
        .flat_map(|p| (0..=m).map(move |q| (p, q)))
        .filter(|(p, q)| (*p, *q) != (0, 0) && (*p, *q) != (m, m))
        .collect();
    let grid = TensorGrid::new(s.bounds.iter().map(|(lo, hi)| AxisRule::new(*lo, *hi, 5, &[])).collect());
    let g_compiled = CompiledCExpr::new(&fm.g.iter().map(|g| CExpr::real(g.clone())).collect::<Vec<_>>())?;
    let mut bigrading_max: f64 = 0.0;
    let mut bigrading_witness = None;
    for idx in 0..sample_forms {
        let pq = types[idx % types.len()];
        let u = pure_form(s, &mut rng, pq, &cutoff);
        let lu = lap.apply(s, &u)?;
        let basis = s.basis();
        let mut masks = Vec::new();
        let mut on_type = Vec::new();
        let mut off_type = Vec::new();
        for (mask, c) in lu.terms() {
            masks.push(*mask);
            if basis.bidegree(*mask) == pq {
                on_type.push(c.clone());
                off_type.push(CExpr::zero());
            } else {
                on_type.push(CExpr::zero());
                off_type.push(c.clone());
            }
        }
        if off_type.iter().all(|c| c.re.is_zero_structural() && c.im.is_zero_structural()) {
            continue;
        }
        let on_c = CompiledCExpr::new(&on_type)?;
        let off_c = CompiledCExpr::new(&off_type)?;
        let (mut on_mass, mut off_mass) = (0.0, 0.0);
        for i in 0..grid.len() {
            let (x, w) = grid.point(i);
            let g: Vec<f64> = g_compiled.eval(&x)?.iter().map(|z| z.re).collect();
            on_mass += w * weighted_norm2(&on_c.eval(&x)?, &masks, &g);
            off_mass += w * weighted_norm2(&off_c.eval(&x)?, &masks, &g);
        }
        let rel = (off_mass / (on_mass + off_mass).max(1e-300)).sqrt();
        if rel > bigrading_max {
            bigrading_max = rel;
            bigrading_witness = Some((pq, idx));
        }
    }

    let a_yes = d_theta_zero == Tri::Yes;
    let b_zero = torsion_symbol_max < TORSION_SYMBOL_TOL;
    let c_zero = bigrading_max < BIGRADING_TOL;
    let consistent = a_yes == b_zero && b_zero == c_zero && d_theta_zero != Tri::Unknown;
    let is_kaehler = match d_theta_zero {
        Tri::Unknown if b_zero && c_zero => Tri::Yes,
        Tri::Unknown if !b_zero && !c_zero => Tri::No,
        other => other,
    };
    Ok(KaehlerReport {
        d_theta_zero,
        torsion_symbol_max,
        torsion_witness,
        bigrading_max,
        bigrading_witness,
        is_kaehler,
        consistent,
    })
}
