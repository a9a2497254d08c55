//! Hermitian layer on complex scenarios: the fundamental form, Lefschetz
//! operators, torsion, and the diagnostics built on them.
//!
//! Symbolic operators live on the frame coframe `e^I` with the diagonal
//! fiber weights of [`FrameMetric`]; numeric matrices are returned in the
//! orthonormal coframe `u^I` of the fiber at a point.

mod kaehler;
mod obstruct;
mod second;
mod subkaehler;
#[cfg(test)]
mod tests;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::charops::{exterior_d, mat_add_entry, mat_mul, mat_scale, FrameMetric, SparseMat};
use crate::error::{Error, Result};
use crate::exterior::{wedge_pair_sign, wedge_sign, Basis, Form, Mask};
use crate::framedgeom::{FiberData, Scenario};
use crate::symexpr::{CExpr, Expr, Rational};

pub use kaehler::{kaehler_check, torsion_symbol, KaehlerReport};
pub use obstruct::{
    bracket_coefficients, involutivity_verdict, normal_covector, obstruction_symbol,
    normal_bracket_matrix, InvolutivityVerdict,
};
pub use second::{second_fundamental, ProjectorJet, SecondFundamentalForms};
pub use subkaehler::{sub_kaehler_residual, SubKaehler, SubKaehlerReport};

type C = Complex64;

/// Interior product with the frame field `e_k`.
pub fn interior_mat(basis: Basis, k: usize) -> SparseMat {
    let mut m = SparseMat::new();
    for mask in 0..basis.dim() as Mask {
        if mask & (1 << k) != 0 {
            let rest = mask & !(1 << k);
            mat_add_entry(&mut m, (rest, mask), CExpr::int(wedge_sign(k, rest) as i64));
        }
    }
    m
}

/// Left exterior multiplication by `f`.
pub fn wedge_mat(f: &Form) -> SparseMat {
    let basis = f.basis();
    let mut m = SparseMat::new();
    for c in 0..basis.dim() as Mask {
        for (a, v) in f.terms() {
            if a & c == 0 {
                let s = wedge_pair_sign(*a, c) as i64;
                mat_add_entry(&mut m, (a | c, c), v.scale(&Rational::from_integer(s.into())));
            }
        }
    }
    m
}

/// `u -> conj(M conj(u))`.
pub fn conj_mat(basis: Basis, m: &SparseMat) -> SparseMat {
    let mut out = SparseMat::new();
    for c in 0..basis.dim() as Mask {
        let col = crate::charops::mat_apply(m, &Form::monomial(basis, c, CExpr::one()).conj()).conj();
        for (r, v) in col.terms() {
            mat_add_entry(&mut out, (*r, c), v.clone());
        }
    }
    out
}

/// Adjoint of a zero-order operator for the fiber weights `H_I`.
pub fn fiber_adjoint(fm: &FrameMetric, m: &SparseMat) -> SparseMat {
    let mut out = SparseMat::new();
    for ((r, c), v) in m {
        mat_add_entry(&mut out, (*c, *r), v.conj().scale_real(&fm.ratio(*r, *c)));
    }
    out
}

/// `[a, b]` for zero-order operators.
pub fn mat_commutator(a: &SparseMat, b: &SparseMat) -> SparseMat {
    let mut out = mat_mul(a, b);
    for (k, v) in mat_mul(b, a) {
        mat_add_entry(&mut out, k, v.neg());
    }
    out
}

/// Numeric value of a symbolic matrix on the `e^I` basis.
pub fn eval_mat(dim: usize, m: &SparseMat, x: &[f64]) -> Result<DMatrix<C>> {
    let mut out = DMatrix::zeros(dim, dim);
    for ((r, c), v) in m {
        out[(*r as usize, *c as usize)] += v.eval(x)?;
    }
    Ok(out)
}

/// Converts an `e^I`-basis operator to the orthonormal coframe.
pub fn to_ortho_basis(fd: &FiberData, m: &DMatrix<C>) -> DMatrix<C> {
    &fd.to_ortho * m * &fd.from_ortho
}

/// Symbolic Hermitian data of a complex scenario with an orthogonal frame.
#[derive(Debug, Clone)]
pub struct HermitianData {
    pub m: usize,
    pub metric: FrameMetric,
    /// `Theta = i sum g_j e^j ∧ conj(e^j)`.
    pub theta: Form,
    pub theta_w: Form,
    /// `del Theta`, of type (2,1).
    pub d_theta: Form,
    /// The part of `del Theta` supported on `W`.
    pub d_theta_w: Form,
    pub lefschetz: SparseMat,
    pub lambda: SparseMat,
    pub lefschetz_w: SparseMat,
    pub lambda_w: SparseMat,
    /// `[Lambda, del Theta]`.
    pub torsion_op: SparseMat,
    /// `[Lambda_W, del_W Theta_W]`.
    pub torsion_op_w: SparseMat,
    /// Indices of the holomorphic frame fields spanning `W`.
    pub w_hol: Vec<usize>,
}

fn theta_of(basis: Basis, m: usize, g: &[Expr], keep: impl Fn(usize) -> bool) -> Form {
    let mut th = Form::zero(basis);
    for j in (0..m).filter(|j| keep(*j)) {
        th.add_term((1 << j) | (1 << (j + m)), CExpr::new(Expr::zero(), g[j].clone()));
    }
    th
}

fn lefschetz_pair(basis: Basis, m: usize, fm: &FrameMetric, keep: impl Fn(usize) -> bool) -> (SparseMat, SparseMat) {
    let mut l = SparseMat::new();
    let mut lam = SparseMat::new();
    for j in (0..m).filter(|j| keep(*j)) {
        let ej = wedge_mat(&Form::basis_one_form(basis, j));
        let ebj = wedge_mat(&Form::basis_one_form(basis, j + m));
        let gj = CExpr::new(Expr::zero(), fm.g[j].clone());
        for (k, v) in mat_mul(&ej, &ebj) {
            mat_add_entry(&mut l, k, v.mul(&gj));
        }
        // -i / g_j * i_{conj e_j} i_{e_j}
        let c = CExpr::new(Expr::zero(), fm.g[j].recip().expect("metric weight").neg());
        for (k, v) in mat_mul(&interior_mat(basis, j + m), &interior_mat(basis, j)) {
            mat_add_entry(&mut lam, k, v.mul(&c));
        }
    }
    (l, lam)
}

/// Builds `Theta`, `del Theta`, the Lefschetz pairs and torsion operators.
pub fn hermitian_data(s: &Scenario) -> Result<HermitianData> {
    let m = s.m().ok_or(Error::NotComplexScenario)?;
    let metric = FrameMetric::new(s)?;
    let basis = s.basis();
    let w_hol = s.w_hol();
    let in_w = |j: usize| w_hol.contains(&j);
    let theta = theta_of(basis, m, &metric.g, |_| true);
    let theta_w = theta_of(basis, m, &metric.g, in_w);
    let d = exterior_d(s)?;
    let dth = d.apply(s, &theta)?.canonical();
    let d_theta = dth.restrict(|mask| basis.bidegree(mask) == (2, 1)).canonical();
    let w_mask = s.w_mask();
    let d_theta_w = d_theta.restrict(|mask| mask & !w_mask == 0);
    let (lefschetz, lambda) = lefschetz_pair(basis, m, &metric, |_| true);
    let (lefschetz_w, lambda_w) = lefschetz_pair(basis, m, &metric, in_w);
    let torsion_op = canonical_mat(&mat_commutator(&lambda, &wedge_mat(&d_theta)));
    let torsion_op_w = canonical_mat(&mat_commutator(&lambda_w, &wedge_mat(&d_theta_w)));
    Ok(HermitianData {
        m,
        metric,
        theta,
        theta_w,
        d_theta,
        d_theta_w,
        lefschetz,
        lambda,
        lefschetz_w,
        lambda_w,
        torsion_op,
        torsion_op_w,
        w_hol,
    })
}

pub(crate) fn canonical_mat(m: &SparseMat) -> SparseMat {
    let mut out = SparseMat::new();
    for (k, v) in m {
        mat_add_entry(&mut out, *k, v.canonical());
    }
    out
}

impl HermitianData {
    /// `del Theta (u_a, u_b, conj u_c)` in the orthonormal frame at the
    /// fiber's point, as `[a][b][c]`.
    pub fn d_theta_at(&self, fd: &FiberData) -> Result<Vec<Vec<Vec<C>>>> {
        let m = self.m;
        let x = &fd.point;
        let mut out = vec![vec![vec![C::new(0.0, 0.0); m]; m]; m];
        for (mask, v) in self.d_theta.terms() {
            let hol: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
            let anti: Vec<usize> = (0..m).filter(|i| mask & (1 << (i + m)) != 0).collect();
            let (a, b, c) = (hol[0], hol[1], anti[0]);
            let scale = (self.metric.g[a].eval(x)? * self.metric.g[b].eval(x)? * self.metric.g[c].eval(x)?).sqrt();
            let val = v.eval(x)? / scale;
            out[a][b][c] += val;
            out[b][a][c] -= val;
        }
        Ok(out)
    }

    /// Torsion components `<T(u_a, u_b), conj u_c> = -i del Theta(u_a, u_b, conj u_c)`.
    pub fn torsion_at(&self, fd: &FiberData) -> Result<Vec<Vec<Vec<C>>>> {
        let mi = C::new(0.0, -1.0);
        Ok(self
            .d_theta_at(fd)?
            .into_iter()
            .map(|p| p.into_iter().map(|q| q.into_iter().map(|v| v * mi).collect()).collect())
            .collect())
    }

    /// Symbolic torsion components on the frame coframe, `-i` times the
    /// coefficient of `e^a ∧ e^b ∧ conj(e^c)` for `a < b`.
    pub fn torsion_frame(&self) -> Vec<((usize, usize, usize), CExpr)> {
        let m = self.m;
        self.d_theta
            .terms()
            .map(|(mask, v)| {
                let hol: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
                let c = (0..m).find(|i| mask & (1 << (i + m)) != 0).expect("type (2,1)");
                ((hol[0], hol[1], c), v.mul(&CExpr::i()).neg())
            })
            .collect()
    }

    /// Named zero-order operators at a point, in the orthonormal coframe.
    pub fn matrices_at(&self, fd: &FiberData) -> Result<Vec<(&'static str, DMatrix<C>)>> {
        let dim = fd.dim();
        let x = &fd.point;
        let list: [(&'static str, &SparseMat); 6] = [
            ("L", &self.lefschetz),
            ("Lambda", &self.lambda),
            ("L_W", &self.lefschetz_w),
            ("Lambda_W", &self.lambda_w),
            ("T", &self.torsion_op),
            ("T_W", &self.torsion_op_w),
        ];
        list.iter()
            .map(|(n, m)| Ok((*n, to_ortho_basis(fd, &eval_mat(dim, m, x)?))))
            .collect()
    }

    pub fn scaled(&self, m: &SparseMat, c: &CExpr) -> SparseMat {
        mat_scale(m, c)
    }
}
