//! The generalized sub-Kähler identity
//! `[Lambda_W, del_W] = i (delbar_W* + conj(T_W)*) - i sum (a_{j alpha} - T_{j alpha alpha}) i_{conj w_j} pi_W`,
//! checked pointwise on random `W`-forms.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::kaehler::random_affine;
use super::second::ProjectorJet;
use super::{conj_mat, fiber_adjoint, HermitianData};
use crate::charops::{build_characteristic_ops, FirstOrderOp, OperatorField};
use crate::error::{Error, Result};
use crate::exterior::{wedge_covector_matrix, Form, Mask};
use crate::framedgeom::{fiber_projectors, sample_points, FiberData, Scenario};
use crate::symexpr::{CExpr, CompiledCExpr};

type C = Complex64;

/// The two symbolic sides of the identity, on the frame coframe.
pub struct SubKaehler {
    pub hd: HermitianData,
    /// `[Lambda_W, del_W]`.
    pub lhs: OperatorField,
    /// `i (delbar_W* + conj(T_W)*)`.
    pub rhs: FirstOrderOp,
}

impl SubKaehler {
    pub fn new(s: &Scenario) -> Result<SubKaehler> {
        let hd = super::hermitian_data(s)?;
        let ops = build_characteristic_ops(s)?;
        let cx = ops.complex.as_ref().ok_or(Error::NotComplexScenario)?;
        let basis = s.basis();
        let del_w = cx.del.sandwich(&ops.pi_w, &ops.pi_w).canonical();
        let dbs_w = cx.delbar_star.sandwich(&ops.pi_w, &ops.pi_w).canonical();
        let lam_w = FirstOrderOp::multiplication(basis, hd.lambda_w.clone());
        let lhs = OperatorField::supercommutator("[Lambda_W, del_W]", 1, &Arc::new(lam_w), false, &Arc::new(del_w), true);
        let tbar_star = fiber_adjoint(&hd.metric, &conj_mat(basis, &hd.torsion_op_w));
        let rhs = dbs_w
            .add(&FirstOrderOp::multiplication(basis, tbar_star))?
            .scale(&CExpr::i())
            .canonical();
        Ok(SubKaehler { hd, lhs, rhs })
    }

    /// `-i sum_{alpha, j} (a_{j alpha} - T_{j alpha alpha}) i_{conj u_j} pi_W`
    /// in the orthonormal coframe.
    pub fn correction(&self, fd: &FiberData, jet: &ProjectorJet) -> Result<DMatrix<C>> {
        let m = self.hd.m;
        let n = fd.n;
        let t = self.hd.torsion_at(fd)?;
        let dim = fd.dim();
        let mut out = DMatrix::<C>::zeros(dim, dim);
        for &alpha in &jet.normal {
            let mut e = vec![C::new(0.0, 0.0); m];
            e[alpha] = C::new(1.0, 0.0);
            let a = jet.a(&e);
            for &j in &jet.w {
                let coef = a[(j, alpha)] - t[j][alpha][alpha];
                if coef.norm() == 0.0 {
                    continue;
                }
                let mut v = vec![C::new(0.0, 0.0); n];
                v[m + j] = C::new(1.0, 0.0);
                let iota = wedge_covector_matrix(n, &v).transpose();
                out += iota * coef;
            }
        }
        Ok(out * &fd.pi_w * C::new(0.0, -1.0))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SubKaehlerReport {
    pub max_residual: f64,
    pub max_lhs: f64,
    /// Largest norm of the correction term at the sampled points.
    pub max_correction: f64,
    pub points: usize,
    pub forms: usize,
}

/// Random `W`-form with affine coefficients on every monomial supported
/// on `W`.
pub(crate) fn random_w_form(s: &Scenario, rng: &mut ChaCha8Rng) -> Form {
    let basis = s.basis();
    let w = s.w_mask();
    let mut f = Form::zero(basis);
    for mask in 0..basis.dim() as Mask {
        if mask & !w == 0 {
            f.add_term(mask, random_affine(rng, s.n()));
        }
    }
    f.canonical()
}

fn vec_of(vals: Vec<C>, masks: &[Mask], dim: usize) -> DVector<C> {
    let mut v = DVector::zeros(dim);
    for (x, m) in vals.into_iter().zip(masks) {
        v[*m as usize] += x;
    }
    v
}

/// Max pointwise discrepancy of the identity in the orthonormal coframe.
pub fn sub_kaehler_residual(s: &Scenario, points: usize, forms: usize) -> Result<SubKaehlerReport> {
    let sk = SubKaehler::new(s)?;
    let dim = s.basis().dim();
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed ^ 0x5ab);
    let mut compiled = Vec::with_capacity(forms);
    for _ in 0..forms {
        let u = random_w_form(s, &mut rng);
        let l = sk.lhs.apply(s, &u)?;
        let r = sk.rhs.apply(s, &u)?;
        let pack = |f: &Form| -> Result<(Vec<Mask>, CompiledCExpr)> {
            let masks: Vec<Mask> = f.terms().map(|(m, _)| *m).collect();
            let cs: Vec<CExpr> = f.terms().map(|(_, c)| c.clone()).collect();
            Ok((masks, CompiledCExpr::new(&cs)?))
        };
        compiled.push((pack(&u)?, pack(&l)?, pack(&r)?));
    }
    let mut max_residual: f64 = 0.0;
    let mut max_lhs: f64 = 0.0;
    let mut max_correction: f64 = 0.0;
    let pts = sample_points(s, points);
    for x in &pts {
        let fd = fiber_projectors(s, x)?;
        let jet = ProjectorJet::from_fiber(s, &fd, 1e-5)?;
        let corr = sk.correction(&fd, &jet)?;
        max_correction = max_correction.max(corr.norm());
        for ((um, uc), (lm, lc), (rm, rc)) in &compiled {
            let ev = |masks: &[Mask], c: &CompiledCExpr| -> Result<DVector<C>> {
                let vals = if masks.is_empty() { vec![] } else { c.eval(x)? };
                Ok(vec_of(vals, masks, dim))
            };
            let u = &fd.to_ortho * ev(um, uc)?;
            let l = &fd.to_ortho * ev(lm, lc)?;
            let r = &fd.to_ortho * ev(rm, rc)? + &corr * &u;
            max_lhs = max_lhs.max(l.norm());
            max_residual = max_residual.max((l - r).norm());
        }
    }
    Ok(SubKaehlerReport {
        max_residual,
        max_lhs,
        max_correction,
        points: pts.len(),
        forms,
    })
}
