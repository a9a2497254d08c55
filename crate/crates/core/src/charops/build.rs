//! Exterior derivative, codifferentials and the characteristic operators.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::Ratio;
use num_traits::ToPrimitive;

use super::op::{mat_add_entry, mat_identity, FirstOrderOp, FrameMetric, OperatorField, SparseMat};
use crate::error::{Error, Result};
use crate::exterior::{grade, wedge_sign, Form, Mask};
use crate::framedgeom::{constant_rank_audit, fiber_projectors, sample_points, FiberData, Scenario};
use crate::symexpr::{CExpr, Rational};

/// `d e^I` on the frame coframe, using `d e^k = -sum_{a<b} c^k_{ab} e^a ∧ e^b`.
pub fn d_of_monomial(s: &Scenario, mask: Mask) -> Result<Form> {
    let basis = s.basis();
    let n = s.n();
    let de = |k: usize| -> Form {
        let mut f = Form::zero(basis);
        for a in 0..n {
            for b in (a + 1)..n {
                let c = s.structure(k, a, b);
                if !c.is_zero_structural() {
                    f.add_term((1 << a) | (1 << b), c.neg());
                }
            }
        }
        f
    };
    // d(e^{i} ∧ rest) = de^i ∧ rest - e^i ∧ d(rest)
    let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
    let mut acc = Form::zero(basis);
    for (pos, &i) in idx.iter().enumerate() {
        let mut term = Form::scalar(basis, CExpr::one());
        for (q, &j) in idx.iter().enumerate() {
            let factor = if q == pos { de(i) } else { Form::basis_one_form(basis, j) };
            term = term.wedge(&factor)?;
        }
        acc = if pos % 2 == 0 { acc.add(&term)? } else { acc.sub(&term)? };
    }
    Ok(acc)
}

/// Exterior derivative as a first-order operator on the frame coframe.
pub fn exterior_d(s: &Scenario) -> Result<FirstOrderOp> {
    let basis = s.basis();
    let n = s.n();
    let mut op = FirstOrderOp::zero(basis);
    for mask in 0..basis.dim() as Mask {
        for k in 0..n {
            if mask & (1 << k) == 0 {
                let sgn = CExpr::int(wedge_sign(k, mask) as i64);
                mat_add_entry(&mut op.a[k], (mask | (1 << k), mask), sgn);
            }
        }
        for (j, c) in d_of_monomial(s, mask)?.terms() {
            mat_add_entry(&mut op.b, (*j, mask), c.clone());
        }
    }
    Ok(op.canonical())
}

/// Formal adjoint of `d` for the scenario metric.
pub fn codifferential(s: &Scenario, fm: &FrameMetric) -> Result<FirstOrderOp> {
    exterior_d(s)?.adjoint(s, fm)
}

/// `d* = (-1)^{n(k+1)+1} * d *` on `k`-forms, for a real orthonormal frame.
pub fn codifferential_via_star(s: &Scenario) -> Result<FirstOrderOp> {
    if s.is_complex() || !s.is_frame_orthonormal() {
        return Err(Error::NonDiagonalMetric);
    }
    let basis = s.basis();
    let n = s.n();
    let full = basis.full();
    let mut star = SparseMat::new();
    let mut star_signed = SparseMat::new();
    for mask in 0..basis.dim() as Mask {
        let comp = full & !mask;
        let f = Form::monomial(basis, mask, CExpr::one()).hodge_star_orthonormal()?;
        let c = f.coeff(comp);
        let k = grade(mask);
        let sign = if (n * (k + 1) + 1) % 2 == 0 { 1 } else { -1 };
        mat_add_entry(&mut star, (comp, mask), c.clone());
        mat_add_entry(&mut star_signed, (comp, mask), c.scale(&Rational::from_integer(sign.into())));
    }
    Ok(exterior_d(s)?.sandwich(&star, &star_signed).canonical())
}

/// `(del, delbar)` parts of `d` on a complex scenario.
pub fn dolbeault_split(s: &Scenario) -> Result<(FirstOrderOp, FirstOrderOp)> {
    if !s.is_complex() {
        return Err(Error::NotComplexScenario);
    }
    let d = exterior_d(s)?;
    Ok((d.bidegree_part((1, 0)), d.bidegree_part((0, 1))))
}

fn rationalize(x: f64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    let r = Ratio::<i64>::approximate_float(x)?;
    if r.denom().abs() > 4096 || (r.to_f64()? - x).abs() > 1e-10 {
        return None;
    }
    Some(Rational::new((*r.numer()).into(), (*r.denom()).into()))
}

/// Converts a pointwise projector to a constant symbolic matrix on the
/// frame coframe, checking it is the same at every sample point.
pub fn symbolic_projector(
    s: &Scenario,
    what: &str,
    points: &[Vec<f64>],
    pick: impl Fn(&FiberData) -> DMatrix<Complex64>,
) -> Result<SparseMat> {
    let mut first: Option<DMatrix<Complex64>> = None;
    for x in points {
        let fd = fiber_projectors(s, x)?;
        let m = fd.to_frame_basis(&pick(&fd));
        match &first {
            None => first = Some(m),
            Some(f) => {
                if (f - &m).camax() > 1e-9 {
                    return Err(Error::NonConstantProjector(what.to_string()));
                }
            }
        }
    }
    let m = first.ok_or_else(|| Error::NonConstantProjector(what.to_string()))?;
    let mut out = SparseMat::new();
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let v = m[(r, c)];
            if v.norm() < 1e-12 {
                continue;
            }
            let re = rationalize(v.re).ok_or_else(|| Error::NonConstantProjector(what.to_string()))?;
            let im = rationalize(v.im).ok_or_else(|| Error::NonConstantProjector(what.to_string()))?;
            mat_add_entry(&mut out, (r as Mask, c as Mask), CExpr::constant(re, im));
        }
    }
    Ok(out)
}

/// The characteristic complex of a scenario and related operators, all on
/// the frame coframe.
#[derive(Debug, Clone)]
pub struct CharacteristicOps {
    pub metric: FrameMetric,
    pub generic_ranks: Vec<usize>,
    pub pi_w: SparseMat,
    pub pi_q: SparseMat,
    pub d: Arc<FirstOrderOp>,
    pub d_star: Arc<FirstOrderOp>,
    pub d_q: Arc<FirstOrderOp>,
    pub d_q_star: Arc<FirstOrderOp>,
    pub laplacian: OperatorField,
    pub complex: Option<ComplexOps>,
}

#[derive(Debug, Clone)]
pub struct ComplexOps {
    pub del: Arc<FirstOrderOp>,
    pub delbar: Arc<FirstOrderOp>,
    pub del_star: Arc<FirstOrderOp>,
    pub delbar_star: Arc<FirstOrderOp>,
    pub del_q: Arc<FirstOrderOp>,
    pub delbar_q: Arc<FirstOrderOp>,
    pub del_q_star: Arc<FirstOrderOp>,
    pub delbar_q_star: Arc<FirstOrderOp>,
}

impl CharacteristicOps {
    /// `[del_Q, delbar_Q*]`, first order by the structure theory.
    pub fn obstruction_operator(&self) -> Result<OperatorField> {
        let c = self.complex.as_ref().ok_or(Error::NotComplexScenario)?;
        Ok(OperatorField::supercommutator(
            "[del_Q, delbar_Q*]",
            2,
            &c.del_q,
            true,
            &c.delbar_q_star,
            true,
        ))
    }

    pub fn op(&self, name: &str) -> Result<OperatorField> {
        let single = |n: &str, o: &Arc<FirstOrderOp>| OperatorField::single(n, (**o).clone());
        let cx = || self.complex.as_ref().ok_or(Error::NotComplexScenario);
        Ok(match name {
            "d" => single(name, &self.d),
            "d*" => single(name, &self.d_star),
            "d_Q" => single(name, &self.d_q),
            "d_Q*" => single(name, &self.d_q_star),
            "laplacian_Q" => self.laplacian.clone(),
            "hodge_laplacian" => laplacian("hodge_laplacian", &self.d, &self.d_star),
            "del_Q" => single(name, &cx()?.del_q),
            "delbar_Q" => single(name, &cx()?.delbar_q),
            "del_Q*" => single(name, &cx()?.del_q_star),
            "delbar_Q*" => single(name, &cx()?.delbar_q_star),
            "obstruction" => self.obstruction_operator()?,
            other => return Err(Error::Validation(vec![format!("unknown operator `{other}`")])),
        })
    }
}

pub const OPERATOR_NAMES: &[&str] = &[
    "d", "d*", "d_Q", "d_Q*", "laplacian_Q", "hodge_laplacian", "del_Q", "delbar_Q", "del_Q*",
    "delbar_Q*", "obstruction",
];

fn laplacian(name: &str, d: &Arc<FirstOrderOp>, ds: &Arc<FirstOrderOp>) -> OperatorField {
    OperatorField {
        name: name.to_string(),
        order: 2,
        basis: d.basis,
        terms: vec![
            (CExpr::one(), vec![d.clone(), ds.clone()]),
            (CExpr::one(), vec![ds.clone(), d.clone()]),
        ],
    }
}

/// Builds `d_Q = pi_Q d pi_Q`, its adjoint, `Delta_Q`, and on complex
/// scenarios the Dolbeault pieces. Fails on rank drops.
pub fn build_characteristic_ops(s: &Scenario) -> Result<CharacteristicOps> {
    let metric = FrameMetric::new(s)?;
    let audit = constant_rank_audit(s, 16)?;
    if !audit.passed {
        let (point, _) = audit.outliers[0].clone();
        return Err(Error::RankDrop {
            what: format!("F_phi (generic ranks {:?})", audit.generic_ranks),
            point,
        });
    }
    let points = sample_points(s, 6);
    let pi_q = symbolic_projector(s, "Q", &points, |fd| fd.pi_q.clone())?;
    let pi_w = symbolic_projector(s, "W", &points, |fd| fd.pi_w.clone())?;
    let d = exterior_d(s)?;
    let d_star = d.adjoint(s, &metric)?;
    let d_q = d.sandwich(&pi_q, &pi_q).canonical();
    let d_q_star = d_star.sandwich(&pi_q, &pi_q).canonical();
    let (d, d_star, d_q, d_q_star) = (Arc::new(d), Arc::new(d_star), Arc::new(d_q), Arc::new(d_q_star));
    let lap = laplacian("laplacian_Q", &d_q, &d_q_star);
    let complex = if s.is_complex() {
        let del = d.bidegree_part((1, 0));
        let delbar = d.bidegree_part((0, 1));
        let del_star = del.adjoint(s, &metric)?;
        let delbar_star = delbar.adjoint(s, &metric)?;
        let q = |o: &FirstOrderOp| Arc::new(o.sandwich(&pi_q, &pi_q).canonical());
        Some(ComplexOps {
            del_q: q(&del),
            delbar_q: q(&delbar),
            del_q_star: q(&del_star),
            delbar_q_star: q(&delbar_star),
            del: Arc::new(del),
            delbar: Arc::new(delbar),
            del_star: Arc::new(del_star),
            delbar_star: Arc::new(delbar_star),
        })
    } else {
        None
    };
    Ok(CharacteristicOps {
        metric,
        generic_ranks: audit.generic_ranks,
        pi_w,
        pi_q,
        d,
        d_star,
        d_q,
        d_q_star,
        laplacian: lap,
        complex,
    })
}

/// Identity on the frame coframe of `s`.
pub fn identity(s: &Scenario) -> SparseMat {
    mat_identity(s.basis())
}
