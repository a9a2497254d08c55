//! First-order operators on forms written in a frame, and composites.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exterior::{Basis, Form, Mask};
use crate::framedgeom::Scenario;
use crate::symexpr::{CExpr, Expr, Rational, Tri};

/// Sparse matrix on the exterior algebra, keyed by `(row, column)` masks.
pub type SparseMat = BTreeMap<(Mask, Mask), CExpr>;

pub fn mat_add_entry(m: &mut SparseMat, key: (Mask, Mask), v: CExpr) {
    if v.is_zero_structural() {
        return;
    }
    let merged = match m.remove(&key) {
        Some(old) => old.add(&v),
        None => v,
    };
    if !merged.is_zero_structural() {
        m.insert(key, merged);
    }
}

pub fn mat_mul(a: &SparseMat, b: &SparseMat) -> SparseMat {
    let mut by_row: BTreeMap<Mask, Vec<(Mask, &CExpr)>> = BTreeMap::new();
    for ((r, c), v) in b {
        by_row.entry(*r).or_default().push((*c, v));
    }
    let mut out = SparseMat::new();
    for ((r, k), va) in a {
        if let Some(row) = by_row.get(k) {
            for (c, vb) in row {
                mat_add_entry(&mut out, (*r, *c), va.mul(vb));
            }
        }
    }
    out
}

pub fn mat_adjoint(a: &SparseMat) -> SparseMat {
    a.iter().map(|((r, c), v)| ((*c, *r), v.conj())).collect()
}

pub fn mat_scale(a: &SparseMat, s: &CExpr) -> SparseMat {
    let mut out = SparseMat::new();
    for (k, v) in a {
        mat_add_entry(&mut out, *k, v.mul(s));
    }
    out
}

pub fn mat_sum(a: &SparseMat, b: &SparseMat) -> SparseMat {
    let mut out = a.clone();
    for (k, v) in b {
        mat_add_entry(&mut out, *k, v.clone());
    }
    out
}

pub fn mat_apply(a: &SparseMat, u: &Form) -> Form {
    let mut out = Form::zero(u.basis());
    for ((r, c), v) in a {
        let x = u.coeff(*c);
        if !x.is_zero_structural() {
            out.add_term(*r, v.mul(&x));
        }
    }
    out
}

pub fn mat_identity(basis: Basis) -> SparseMat {
    (0..basis.dim() as Mask).map(|i| ((i, i), CExpr::one())).collect()
}

/// `P = sum_k A_k e_k + B`, acting on coefficient vectors in the frame
/// coframe of a scenario.
#[derive(Debug, Clone)]
pub struct FirstOrderOp {
    pub basis: Basis,
    pub a: Vec<SparseMat>,
    pub b: SparseMat,
}

impl FirstOrderOp {
    pub fn zero(basis: Basis) -> FirstOrderOp {
        FirstOrderOp {
            basis,
            a: vec![SparseMat::new(); basis.slots],
            b: SparseMat::new(),
        }
    }

    /// Zeroth-order operator given by a matrix.
    pub fn multiplication(basis: Basis, m: SparseMat) -> FirstOrderOp {
        FirstOrderOp {
            b: m,
            ..FirstOrderOp::zero(basis)
        }
    }

    pub fn is_zeroth_order(&self) -> bool {
        self.a.iter().all(BTreeMap::is_empty)
    }

    pub fn apply(&self, s: &Scenario, u: &Form) -> Result<Form> {
        if u.basis() != self.basis {
            return Err(Error::CoframeMismatch);
        }
        let mut out = mat_apply(&self.b, u);
        for (k, ak) in self.a.iter().enumerate() {
            if ak.is_empty() {
                continue;
            }
            let mut du = Form::zero(self.basis);
            for (m, c) in u.terms() {
                du.add_term(*m, s.apply(k, c)?);
            }
            if du.is_empty() {
                continue;
            }
            out = out.add(&mat_apply(ak, &du))?;
        }
        Ok(out)
    }

    pub fn add(&self, o: &FirstOrderOp) -> Result<FirstOrderOp> {
        if self.basis != o.basis {
            return Err(Error::CoframeMismatch);
        }
        Ok(FirstOrderOp {
            basis: self.basis,
            a: self.a.iter().zip(&o.a).map(|(x, y)| mat_sum(x, y)).collect(),
            b: mat_sum(&self.b, &o.b),
        })
    }

    pub fn scale(&self, c: &CExpr) -> FirstOrderOp {
        FirstOrderOp {
            basis: self.basis,
            a: self.a.iter().map(|x| mat_scale(x, c)).collect(),
            b: mat_scale(&self.b, c),
        }
    }

    /// `L P R` for constant matrices `L`, `R`.
    pub fn sandwich(&self, left: &SparseMat, right: &SparseMat) -> FirstOrderOp {
        FirstOrderOp {
            basis: self.basis,
            a: self.a.iter().map(|x| mat_mul(&mat_mul(left, x), right)).collect(),
            b: mat_mul(&mat_mul(left, &self.b), right),
        }
    }

    pub fn map_entries(&self, f: impl Fn(&CExpr) -> CExpr) -> FirstOrderOp {
        let g = |m: &SparseMat| {
            let mut out = SparseMat::new();
            for (k, v) in m {
                mat_add_entry(&mut out, *k, f(v));
            }
            out
        };
        FirstOrderOp {
            basis: self.basis,
            a: self.a.iter().map(g).collect(),
            b: g(&self.b),
        }
    }

    pub fn canonical(&self) -> FirstOrderOp {
        self.map_entries(CExpr::canonical)
    }

    /// Restricts to the entries whose bidegree shift is `shift`.
    pub fn bidegree_part(&self, shift: (i32, i32)) -> FirstOrderOp {
        let keep = |m: &SparseMat| -> SparseMat {
            m.iter()
                .filter(|((r, c), _)| {
                    let (pr, qr) = self.basis.bidegree(*r);
                    let (pc, qc) = self.basis.bidegree(*c);
                    (pr as i32 - pc as i32, qr as i32 - qc as i32) == shift
                })
                .map(|(k, v)| (*k, v.clone()))
                .collect()
        };
        FirstOrderOp {
            basis: self.basis,
            a: self.a.iter().map(keep).collect(),
            b: keep(&self.b),
        }
    }

    /// Formal adjoint for the L2 product of the scenario's frame metric.
    pub fn adjoint(&self, s: &Scenario, fm: &FrameMetric) -> Result<FirstOrderOp> {
        let n = self.basis.slots;
        let mut out = FirstOrderOp::zero(self.basis);
        // (A^+ H)[J, I] = conj(A[I, J]) H_I, and the result is H^{-1}(...)
        for (k, ak) in self.a.iter().enumerate() {
            let sk = fm.sigma[k];
            for ((r, c), v) in ak {
                let (row, col) = (*c, *r);
                let ratio = CExpr::real(fm.ratio(col, row));
                let entry = v.conj();
                // principal part: -H^{-1} A^+ H on conj(e_k)
                mat_add_entry(&mut out.a[sk], (row, col), entry.mul(&ratio).neg());
                // -H^{-1}[conj(e_k)(A^+ H) + conj(div e_k) A^+ H]
                let ah = entry.mul(&CExpr::real(fm.h(col)));
                let d = s.apply(sk, &ah)?;
                let hinv = CExpr::real(fm.h_inv(row));
                let t = d.add(&fm.div[k].conj().mul(&ah)).mul(&hinv);
                mat_add_entry(&mut out.b, (row, col), t.neg());
            }
        }
        for ((r, c), v) in &self.b {
            let (row, col) = (*c, *r);
            let ratio = CExpr::real(fm.ratio(col, row));
            mat_add_entry(&mut out.b, (row, col), v.conj().mul(&ratio));
        }
        debug_assert_eq!(out.a.len(), n);
        Ok(out.canonical())
    }

    /// Symbolic equality test of all coefficient matrices.
    pub fn equals(&self, o: &FirstOrderOp) -> Tri {
        let diff = match self.add(&o.scale(&CExpr::int(-1))) {
            Ok(d) => d,
            Err(_) => return Tri::No,
        };
        let mut acc = Tri::Yes;
        for m in diff.a.iter().chain(std::iter::once(&diff.b)) {
            for v in m.values() {
                match v.is_zero() {
                    Tri::No => return Tri::No,
                    Tri::Unknown => acc = Tri::Unknown,
                    Tri::Yes => {}
                }
            }
        }
        acc
    }
}

/// Diagonal frame metric data used by adjoints: `g_i = |e_i|^2`, the
/// induced fiber weights `H_I = prod_{i in I} 1/g_i` and divergences.
#[derive(Debug, Clone)]
pub struct FrameMetric {
    pub g: Vec<Expr>,
    /// `div e_k` for the Riemannian volume.
    pub div: Vec<CExpr>,
    /// Index of the conjugate frame field.
    pub sigma: Vec<usize>,
}

impl FrameMetric {
    pub fn new(s: &Scenario) -> Result<FrameMetric> {
        let g = s.diag_gram()?;
        let n = s.n();
        let sigma: Vec<usize> = match s.m() {
            None => (0..n).collect(),
            Some(m) => (0..n).map(|k| if k < m { k + m } else { k - m }).collect(),
        };
        let half = Rational::new(1.into(), 2.into());
        let mut div = Vec::with_capacity(n);
        for k in 0..n {
            let mut d = CExpr::zero();
            for j in 0..n {
                d = d.add(s.structure(j, j, k));
            }
            for gi in &g {
                if gi.is_constant() {
                    continue;
                }
                let dg = s.apply(k, &CExpr::real(gi.clone()))?;
                d = d.add(&dg.scale_real(&gi.recip()?).scale(&half));
            }
            div.push(d.canonical());
        }
        Ok(FrameMetric { g, div, sigma })
    }

    /// `H_I = prod 1/g_i`.
    pub fn h(&self, mask: Mask) -> Expr {
        self.h_inv(mask).recip().expect("metric weights are nonzero")
    }

    pub fn h_inv(&self, mask: Mask) -> Expr {
        let mut acc = Expr::one();
        for (i, gi) in self.g.iter().enumerate() {
            if mask & (1 << i) != 0 {
                acc = acc.mul(gi);
            }
        }
        acc
    }

    /// `H_num / H_den`.
    pub fn ratio(&self, num: Mask, den: Mask) -> Expr {
        let mut acc = Expr::one();
        for (i, gi) in self.g.iter().enumerate() {
            let bit = 1 << i;
            match (num & bit != 0, den & bit != 0) {
                (true, false) => acc = acc.mul(&gi.recip().expect("nonzero")),
                (false, true) => acc = acc.mul(gi),
                _ => {}
            }
        }
        acc
    }
}

/// Linear combination of compositions of first-order operators.
#[derive(Debug, Clone)]
pub struct OperatorField {
    pub name: String,
    pub order: usize,
    pub basis: Basis,
    /// Each term is `c * P_1 P_2 ... P_r`, applied right to left.
    pub terms: Vec<(CExpr, Vec<Arc<FirstOrderOp>>)>,
}

impl OperatorField {
    pub fn single(name: &str, op: FirstOrderOp) -> OperatorField {
        let order = if op.is_zeroth_order() { 0 } else { 1 };
        OperatorField {
            name: name.to_string(),
            order,
            basis: op.basis,
            terms: vec![(CExpr::one(), vec![Arc::new(op)])],
        }
    }

    /// Graded commutator `PQ - (-1)^{|P||Q|} QP` with the given parities.
    pub fn supercommutator(
        name: &str,
        order: usize,
        p: &Arc<FirstOrderOp>,
        p_odd: bool,
        q: &Arc<FirstOrderOp>,
        q_odd: bool,
    ) -> OperatorField {
        let sign = if p_odd && q_odd { 1 } else { -1 };
        OperatorField {
            name: name.to_string(),
            order,
            basis: p.basis,
            terms: vec![
                (CExpr::one(), vec![p.clone(), q.clone()]),
                (CExpr::int(sign), vec![q.clone(), p.clone()]),
            ],
        }
    }

    pub fn apply(&self, s: &Scenario, u: &Form) -> Result<Form> {
        let mut out = Form::zero(self.basis);
        for (c, chain) in &self.terms {
            let mut v = u.clone();
            for op in chain.iter().rev() {
                v = op.apply(s, &v)?;
                if v.is_empty() {
                    break;
                }
            }
            out = out.add(&v.scale(c))?;
        }
        Ok(out)
    }
}
