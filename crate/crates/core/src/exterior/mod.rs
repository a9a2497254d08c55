//! Differential forms with symbolic coefficients over a coframe.
//!
//! A form is a sparse map from basis monomials `e^I` to [`CExpr`]
//! coefficients. Multi-indices are bit masks over the coframe slots, so a
//! strictly increasing index list is implicit. In complex bases the first
//! `m` slots are of type (1,0) and the last `m` of type (0,1), which makes
//! the bigrading of every monomial immediate.

mod fiber;

pub use fiber::{
    conj_matrix, grade_projector, interior_matrix, interior_vector_matrix, wedge_covector_matrix,
    wedge_dense, wedge_matrix, MetricFiber,
};

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::symexpr::{CExpr, Expr, Rational, Tri};

/// Bit mask of coframe slots.
pub type Mask = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coframe {
    /// `dx^i` of a real chart (for complex charts: interleaved `dx, dy`).
    Coordinate,
    /// `dz^k` then `dzbar^k`.
    ComplexCoordinate,
    /// Dual of the scenario frame.
    Frame,
}

/// Which coframe a form is written in and how many slots it has.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Basis {
    pub coframe: Coframe,
    pub slots: usize,
    /// Number of (1,0) slots when the basis is bigraded.
    pub holomorphic: Option<usize>,
}

impl Basis {
    pub fn real(coframe: Coframe, slots: usize) -> Basis {
        Basis {
            coframe,
            slots,
            holomorphic: None,
        }
    }

    pub fn complex(coframe: Coframe, m: usize) -> Basis {
        Basis {
            coframe,
            slots: 2 * m,
            holomorphic: Some(m),
        }
    }

    pub fn dim(&self) -> usize {
        1 << self.slots
    }

    pub fn full(&self) -> Mask {
        ((1u64 << self.slots) - 1) as Mask
    }

    /// `(p, q)` type of a monomial; real bases report `(grade, 0)`.
    pub fn bidegree(&self, mask: Mask) -> (usize, usize) {
        match self.holomorphic {
            Some(m) => {
                let hol = mask & ((1 << m) - 1);
                ((hol.count_ones()) as usize, (mask >> m).count_ones() as usize)
            }
            None => (mask.count_ones() as usize, 0),
        }
    }
}

pub fn grade(mask: Mask) -> usize {
    mask.count_ones() as usize
}

/// Sign of `e^k ∧ e^I` relative to `e^{I ∪ k}`.
pub fn wedge_sign(k: usize, mask: Mask) -> f64 {
    if (mask & ((1 << k) - 1)).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Sign of `e^I ∧ e^J` relative to `e^{I ∪ J}` (disjoint masks).
pub fn wedge_pair_sign(a: Mask, b: Mask) -> f64 {
    let mut swaps = 0u32;
    let mut bb = b;
    while bb != 0 {
        let j = bb.trailing_zeros();
        // elements of a above j must move past it
        swaps += (a >> (j + 1)).count_ones();
        bb &= bb - 1;
    }
    if swaps % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn sign_rational(s: f64) -> Rational {
    Rational::from_integer(if s > 0.0 { 1.into() } else { (-1).into() })
}

#[derive(Clone, PartialEq)]
pub struct Form {
    basis: Basis,
    terms: BTreeMap<Mask, CExpr>,
}

impl Form {
    pub fn zero(basis: Basis) -> Form {
        Form {
            basis,
            terms: BTreeMap::new(),
        }
    }

    pub fn scalar(basis: Basis, c: CExpr) -> Form {
        Form::monomial(basis, 0, c)
    }

    pub fn monomial(basis: Basis, mask: Mask, c: CExpr) -> Form {
        let mut f = Form::zero(basis);
        f.add_term(mask, c);
        f
    }

    /// The basis 1-form `e^k`.
    pub fn basis_one_form(basis: Basis, k: usize) -> Form {
        Form::monomial(basis, 1 << k, CExpr::one())
    }

    /// Builds a 1-form from its coefficients on each slot.
    pub fn one_form(basis: Basis, coeffs: &[CExpr]) -> Form {
        let mut f = Form::zero(basis);
        for (k, c) in coeffs.iter().enumerate() {
            f.add_term(1 << k, c.clone());
        }
        f
    }

    pub fn from_terms(basis: Basis, terms: impl IntoIterator<Item = (Mask, CExpr)>) -> Form {
        let mut f = Form::zero(basis);
        for (m, c) in terms {
            f.add_term(m, c);
        }
        f
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mask, &CExpr)> {
        self.terms.iter()
    }

    pub fn coeff(&self, mask: Mask) -> CExpr {
        self.terms.get(&mask).cloned().unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, mask: Mask, c: CExpr) {
        if c.is_zero_structural() {
            return;
        }
        let merged = match self.terms.remove(&mask) {
            Some(old) => old.add(&c),
            None => c,
        };
        if !merged.is_zero_structural() {
            self.terms.insert(mask, merged);
        }
    }

    fn check(&self, other: &Form) -> Result<()> {
        if self.basis != other.basis {
            return Err(Error::CoframeMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Form) -> Result<Form> {
        self.check(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(*m, c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Form) -> Result<Form> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Form {
        self.map(|c| c.neg())
    }

    pub fn scale(&self, c: &CExpr) -> Form {
        self.map(|x| x.mul(c))
    }

    pub fn scale_rational(&self, r: &Rational) -> Form {
        self.map(|x| x.scale(r))
    }

    pub fn map(&self, f: impl Fn(&CExpr) -> CExpr) -> Form {
        Form::from_terms(self.basis, self.terms.iter().map(|(m, c)| (*m, f(c))))
    }

    pub fn try_map<E>(&self, f: impl Fn(&CExpr) -> std::result::Result<CExpr, E>) -> std::result::Result<Form, E> {
        let mut out = Form::zero(self.basis);
        for (m, c) in &self.terms {
            out.add_term(*m, f(c)?);
        }
        Ok(out)
    }

    pub fn canonical(&self) -> Form {
        self.map(CExpr::canonical)
    }

    pub fn wedge(&self, other: &Form) -> Result<Form> {
        self.check(other)?;
        let mut out = Form::zero(self.basis);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                if a & b != 0 {
                    continue;
                }
                let s = sign_rational(wedge_pair_sign(*a, *b));
                out.add_term(a | b, ca.mul(cb).scale(&s));
            }
        }
        Ok(out)
    }

    /// Contraction with the basis vector dual to slot `k`.
    pub fn interior_basis(&self, k: usize) -> Form {
        let mut out = Form::zero(self.basis);
        for (m, c) in &self.terms {
            if m & (1 << k) == 0 {
                continue;
            }
            let s = sign_rational(wedge_sign(k, *m));
            out.add_term(m & !(1 << k), c.scale(&s));
        }
        out
    }

    /// Contraction with `v = sum_k v_k e_k` given in the dual frame.
    pub fn interior(&self, v: &[CExpr]) -> Result<Form> {
        if v.len() != self.basis.slots {
            return Err(Error::CoframeMismatch);
        }
        let mut out = Form::zero(self.basis);
        for (k, vk) in v.iter().enumerate() {
            if vk.is_zero_structural() {
                continue;
            }
            out = out.add(&self.interior_basis(k).scale(vk))?;
        }
        Ok(out)
    }

    /// Part of grade `k`.
    pub fn grade_part(&self, k: usize) -> Form {
        Form::from_terms(
            self.basis,
            self.terms
                .iter()
                .filter(|(m, _)| grade(**m) == k)
                .map(|(m, c)| (*m, c.clone())),
        )
    }

    pub fn restrict(&self, keep: impl Fn(Mask) -> bool) -> Form {
        Form::from_terms(
            self.basis,
            self.terms
                .iter()
                .filter(|(m, _)| keep(**m))
                .map(|(m, c)| (*m, c.clone())),
        )
    }

    pub fn bidegree_split(&self) -> Result<BTreeMap<(usize, usize), Form>> {
        if self.basis.holomorphic.is_none() {
            return Err(Error::NotComplexScenario);
        }
        let mut out: BTreeMap<(usize, usize), Form> = BTreeMap::new();
        for (m, c) in &self.terms {
            out.entry(self.basis.bidegree(*m))
                .or_insert_with(|| Form::zero(self.basis))
                .add_term(*m, c.clone());
        }
        Ok(out)
    }

    /// Complex conjugate; maps (p,q) monomials to (q,p).
    pub fn conj(&self) -> Form {
        match self.basis.holomorphic {
            None => self.map(CExpr::conj),
            Some(m) => {
                let mut out = Form::zero(self.basis);
                for (mask, c) in &self.terms {
                    let (nm, s) = conj_mask(*mask, m);
                    out.add_term(nm, c.conj().scale(&sign_rational(s)));
                }
                out
            }
        }
    }

    pub fn is_zero(&self) -> Tri {
        let mut acc = Tri::Yes;
        for c in self.terms.values() {
            match c.is_zero() {
                Tri::No => return Tri::No,
                Tri::Unknown => acc = Tri::Unknown,
                Tri::Yes => {}
            }
        }
        acc
    }

    /// Dense coefficient vector at a point, indexed by mask.
    pub fn eval(&self, point: &[f64]) -> Result<Vec<Complex64>> {
        let mut v = vec![Complex64::new(0.0, 0.0); self.basis.dim()];
        for (m, c) in &self.terms {
            v[*m as usize] = c.eval(point)?;
        }
        Ok(v)
    }

    /// Hodge star for an orthonormal real coframe with the slot order as
    /// positive orientation: `*e^I = sign(I, I^c) e^{I^c}`.
    pub fn hodge_star_orthonormal(&self) -> Result<Form> {
        if self.basis.holomorphic.is_some() {
            return Err(Error::NotComplexScenario);
        }
        let full = self.basis.full();
        let mut out = Form::zero(self.basis);
        for (m, c) in &self.terms {
            let comp = full & !m;
            let s = sign_rational(wedge_pair_sign(*m, comp));
            out.add_term(comp, c.scale(&s));
        }
        Ok(out)
    }

    /// Rewrites a form on the interleaved real coordinate coframe
    /// `(dx_0, dy_0, dx_1, dy_1, ...)` in the `(dz, dzbar)` coframe.
    pub fn to_complex_coordinate(&self) -> Result<Form> {
        if self.basis.coframe != Coframe::Coordinate || self.basis.slots % 2 != 0 {
            return Err(Error::CoframeMismatch);
        }
        let m = self.basis.slots / 2;
        let target = Basis::complex(Coframe::ComplexCoordinate, m);
        let half = CExpr::constant(Rational::new(1.into(), 2.into()), Rational::from_integer(0.into()));
        let dz = |k: usize| Form::basis_one_form(target, k);
        let dzb = |k: usize| Form::basis_one_form(target, m + k);
        let mut slot_forms = Vec::with_capacity(2 * m);
        for k in 0..m {
            // dx = (dz + dzbar)/2, dy = (dz - dzbar)/(2i) = -(i/2)(dz - dzbar)
            slot_forms.push(dz(k).add(&dzb(k))?.scale(&half));
            let minus_i_half = CExpr::constant(Rational::from_integer(0.into()), Rational::new((-1).into(), 2.into()));
            slot_forms.push(dz(k).sub(&dzb(k))?.scale(&minus_i_half));
        }
        let mut out = Form::zero(target);
        for (mask, c) in &self.terms {
            let mut acc = Form::scalar(target, c.clone());
            for (k, sf) in slot_forms.iter().enumerate() {
                if mask & (1 << k) != 0 {
                    acc = acc.wedge(sf)?;
                }
            }
            out = out.add(&acc)?;
        }
        Ok(out)
    }

    pub fn display<'a>(&'a self, names: &'a [String]) -> FormDisplay<'a> {
        FormDisplay { form: self, names }
    }
}

/// Conjugation of a bigraded monomial: returns the new mask and sign.
pub fn conj_mask(mask: Mask, m: usize) -> (Mask, f64) {
    let low = (1u32 << m) - 1;
    let hol = mask & low;
    let anti = mask >> m;
    let p = hol.count_ones();
    let q = anti.count_ones();
    let s = if (p * q) % 2 == 0 { 1.0 } else { -1.0 };
    (anti | (hol << m), s)
}

pub struct FormDisplay<'a> {
    form: &'a Form,
    names: &'a [String],
}

fn slot_name(basis: &Basis, k: usize) -> String {
    match (basis.coframe, basis.holomorphic) {
        (Coframe::Coordinate, _) => format!("dx{k}"),
        (Coframe::ComplexCoordinate, Some(m)) if k < m => format!("dz{k}"),
        (Coframe::ComplexCoordinate, Some(m)) => format!("dzbar{}", k - m),
        (Coframe::Frame, Some(m)) if k < m => format!("w{k}"),
        (Coframe::Frame, Some(m)) => format!("wbar{}", k - m),
        _ => format!("e{k}"),
    }
}

impl fmt::Display for FormDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.form.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.form.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let mono: Vec<String> = (0..self.form.basis.slots)
                .filter(|k| m & (1 << k) != 0)
                .map(|k| slot_name(&self.form.basis, k))
                .collect();
            if mono.is_empty() {
                write!(f, "({})", c.display(self.names))?;
            } else {
                write!(f, "({}) {}", c.display(self.names), mono.join("^"))?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display(&[]))
    }
}

/// Convenience: real scalar coefficient.
pub fn real(e: Expr) -> CExpr {
    CExpr::real(e)
}

#[cfg(test)]
mod tests;
