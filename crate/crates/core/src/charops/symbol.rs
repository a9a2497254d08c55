//! Principal symbols: a generic oracle and the closed forms on `Q`.
//!
//! The oracle conjugates an operator by `exp(i t f)` with the affine phase
//! `f = sum_i xi_i (x_i - x0_i)` and reads off the coefficient of `t^order`.
//! For a first-order factor `P = sum_k A_k e_k + B` the twisted operator is
//! exactly `P + i t sum_k A_k e_k(f)`, and `e_k(f) = sum_i xi_i e_k(x_i)`
//! does not depend on `x0`, so the symbol is a symbolic matrix in `(x, xi)`
//! with the covector stored in the coordinate slots `n..2n`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::op::{FirstOrderOp, OperatorField};
use crate::error::{Error, Result};
use crate::exterior::{grade, wedge_covector_matrix, Form, Mask};
use crate::framedgeom::{FiberData, Scenario};
use crate::symexpr::{CExpr, CompiledCExpr, Expr};

type C = Complex64;

/// A symbol as a compiled matrix in the variables `(x, xi)`, acting on
/// coefficients in the frame coframe.
pub struct SymbolMatrix {
    pub dim: usize,
    pub n: usize,
    entries: Vec<(Mask, Mask)>,
    pub symbolic: Vec<CExpr>,
    compiled: CompiledCExpr,
}

impl SymbolMatrix {
    pub fn eval(&self, x: &[f64], xi: &[f64]) -> Result<DMatrix<C>> {
        let mut pt = x.to_vec();
        pt.extend_from_slice(xi);
        let vals = if self.compiled.is_empty() { vec![] } else { self.compiled.eval(&pt)? };
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for ((r, c), v) in self.entries.iter().zip(vals) {
            m[(*r as usize, *c as usize)] = v;
        }
        Ok(m)
    }
}

/// `e_k(f)` for the linear phase with covector slots `n..2n`.
fn phase_derivatives(s: &Scenario) -> Vec<CExpr> {
    let n = s.n();
    s.real_coeffs()
        .iter()
        .map(|row| {
            row.iter().enumerate().fold(CExpr::zero(), |acc, (i, c)| {
                if c.is_zero_structural() {
                    acc
                } else {
                    acc.add(&c.scale_real(&Expr::coord(n + i)))
                }
            })
        })
        .collect()
}

/// Applies the twisted operator to a polynomial in `t` with form
/// coefficients; returns the product up to degree `max_deg`.
fn apply_twisted(
    s: &Scenario,
    op: &FirstOrderOp,
    dphi: &[CExpr],
    poly: &[Form],
    max_deg: usize,
) -> Result<Vec<Form>> {
    let basis = op.basis;
    let mut out = vec![Form::zero(basis); (poly.len() + 1).min(max_deg + 1)];
    for (j, u) in poly.iter().enumerate() {
        if u.is_empty() {
            continue;
        }
        if j < out.len() {
            out[j] = out[j].add(&op.apply(s, u)?)?;
        }
        if j + 1 < out.len() {
            // i * sum_k A_k e_k(f) u
            let mut v = Form::zero(basis);
            for (k, ak) in op.a.iter().enumerate() {
                if ak.is_empty() || dphi[k].is_zero_structural() {
                    continue;
                }
                let scaled = u.scale(&dphi[k].mul_i());
                v = v.add(&super::op::mat_apply(ak, &scaled))?;
            }
            out[j + 1] = out[j + 1].add(&v)?;
        }
    }
    Ok(out)
}

/// Symbol of order `order` of `op`, computed from the operator itself.
pub fn symbol_oracle(s: &Scenario, op: &OperatorField, order: usize) -> Result<SymbolMatrix> {
    if order > op.order {
        return Err(Error::OrderExceedsOperator {
            requested: order,
            order: op.order,
        });
    }
    let basis = op.basis;
    let dphi = phase_derivatives(s);
    let dim = basis.dim();
    let mut entries = Vec::new();
    let mut symbolic = Vec::new();
    for col in 0..dim as Mask {
        let mut total = Form::zero(basis);
        for (c, chain) in &op.terms {
            let mut poly = vec![Form::monomial(basis, col, CExpr::one())];
            for f in chain.iter().rev() {
                poly = apply_twisted(s, f, &dphi, &poly, order)?;
            }
            if let Some(top) = poly.get(order) {
                total = total.add(&top.scale(c))?;
            }
        }
        for (r, v) in total.terms() {
            entries.push((*r, col));
            symbolic.push(v.clone());
        }
    }
    let compiled = CompiledCExpr::new(&symbolic)?;
    Ok(SymbolMatrix {
        dim,
        n: s.n(),
        entries,
        symbolic,
        compiled,
    })
}

/// Pointwise pieces shared by the closed-form symbols, in the orthonormal
/// coframe at the fiber's point.
pub struct CovectorData {
    /// `xi(u_k)`.
    pub xi: Vec<C>,
    /// `xi_W(u_k)`: zero off `W`.
    pub xi_w: Vec<C>,
    /// `xi_W ∧`.
    pub eps: DMatrix<C>,
    /// Adjoint of `eps`, i.e. contraction with the dual of `xi_W`.
    pub iota: DMatrix<C>,
    pub norm2: f64,
}

pub fn covector_data(s: &Scenario, fd: &FiberData, xi: &[f64]) -> Result<CovectorData> {
    let xi_u = fd.covector(s, xi)?;
    let xi_w: Vec<C> = xi_u
        .iter()
        .enumerate()
        .map(|(k, v)| if fd.w_mask & (1 << k) != 0 { *v } else { C::new(0.0, 0.0) })
        .collect();
    let eps = wedge_covector_matrix(fd.n, &xi_w);
    let iota = eps.adjoint();
    let norm2 = xi_w.iter().map(|z| z.norm_sqr()).sum();
    Ok(CovectorData {
        xi: xi_u,
        xi_w,
        eps,
        iota,
        norm2,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosedForms {
    #[serde(skip)]
    pub d_q: DMatrix<C>,
    #[serde(skip)]
    pub d_q_star: DMatrix<C>,
    #[serde(skip)]
    pub laplacian: DMatrix<C>,
}

/// `sigma(d_Q) = i pi_Q xi_W∧ pi_Q`, `sigma(d_Q*) = -i pi_Q i_{xi_W} pi_Q`,
/// `sigma_2(Delta_Q) = pi_Q(|xi_W|^2 - i_{xi_W} (pi_W - pi_Q) xi_W∧)pi_Q`,
/// in the orthonormal coframe.
pub fn closed_form_symbols(s: &Scenario, fd: &FiberData, xi: &[f64]) -> Result<ClosedForms> {
    let cv = covector_data(s, fd, xi)?;
    let i = C::new(0.0, 1.0);
    let pq = &fd.pi_q;
    let pf = &fd.pi_w - pq;
    let id = DMatrix::<C>::identity(fd.dim(), fd.dim());
    let d_q = pq * &cv.eps * pq * i;
    let d_q_star = pq * &cv.iota * pq * (-i);
    let laplacian = pq * (id * C::new(cv.norm2, 0.0) - &cv.iota * pf * &cv.eps) * pq;
    Ok(ClosedForms {
        d_q,
        d_q_star,
        laplacian,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Applicability {
    /// Per grade: whether `sigma_2(Delta_Q)` is scalar on `Q^k`.
    pub scalar_by_grade: Vec<bool>,
    pub applicable: bool,
    /// A covector where the symbol is not scalar, with its grade.
    pub witness: Option<(usize, Vec<f64>, Vec<f64>)>,
}

/// Whether the principal symbol of `Delta_Q` is a scalar on each `Q^k`,
/// checked at the given points and covectors.
pub fn hoermander_applicability(
    s: &Scenario,
    fibers: &[FiberData],
    covectors: &[Vec<f64>],
) -> Result<Applicability> {
    let n = s.n();
    let mut scalar = vec![true; n + 1];
    let mut witness = None;
    for fd in fibers {
        for xi in covectors {
            let sym = closed_form_symbols(s, fd, xi)?.laplacian;
            for k in 0..=n {
                let idx: Vec<usize> = (0..fd.dim()).filter(|i| grade(*i as Mask) == k).collect();
                let pk = DMatrix::from_fn(fd.dim(), fd.dim(), |r, c| {
                    if idx.contains(&r) && idx.contains(&c) {
                        fd.pi_q[(r, c)]
                    } else {
                        C::new(0.0, 0.0)
                    }
                });
                let rank = pk.trace().re.round();
                if rank < 0.5 {
                    continue;
                }
                let block = &pk * &sym * &pk;
                let lambda = block.trace() / rank;
                let resid = (&block - &pk * lambda).camax();
                let scale = block.camax().max(1e-300);
                if resid > 1e-9 * scale.max(1.0) {
                    if scalar[k] && witness.is_none() {
                        witness = Some((k, fd.point.clone(), xi.clone()));
                    }
                    scalar[k] = false;
                }
            }
        }
    }
    Ok(Applicability {
        applicable: scalar.iter().all(|b| *b),
        scalar_by_grade: scalar,
        witness,
    })
}
