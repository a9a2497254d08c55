//! Exact symbolic scalar expressions over chart coordinates.
//!
//! An [`Expr`] is kept in a canonical sum-of-monomials form with exact
//! rational coefficients. Monomials are products of integer powers of
//! [`Atom`]s: coordinates, transcendental functions (`exp`, `sin`, `cos`),
//! unexpanded factors (used for denominators such as `1/(1+x^2)`) and opaque
//! non-smooth leaves that can be evaluated but not differentiated.
//!
//! Arithmetic keeps polynomials in a unique normal form. Rational functions
//! are reduced to lowest terms on demand by [`Expr::canonical`], and
//! [`Expr::is_zero`] decides them exactly by clearing denominators.

mod complex;
mod compile;
mod leaf;
pub(crate) mod parse;
mod poly;

pub use complex::{CExpr, ComplexCoords};
pub use compile::{CompiledCExpr, CompiledExpr};
pub use leaf::{Leaf, LeafFn};
pub use parse::{parse_complex, parse_real, ParseContext, ParseError};

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub type Rational = BigRational;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ExprError {
    #[error("cannot differentiate non-smooth leaf `{0}`")]
    NonSmoothDerivative(String),
    #[error("no evaluator bound for leaf `{0}`")]
    UnboundLeaf(String),
    #[error("evaluation produced a non-finite value")]
    NonFinite,
    #[error("point has {got} coordinates, expression needs {need}")]
    DimensionMismatch { need: usize, got: usize },
    #[error("division by an expression that is identically zero")]
    DivisionByZero,
}

/// Result of an exact-or-probabilistic zero test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Tri {
    Yes,
    No,
    Unknown,
}

impl Tri {
    /// Conjunction of "is zero" answers: all zero, or some nonzero.
    pub fn and(self, o: Tri) -> Tri {
        match (self, o) {
            (Tri::No, _) | (_, Tri::No) => Tri::No,
            (Tri::Yes, Tri::Yes) => Tri::Yes,
            _ => Tri::Unknown,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Exp,
    Sin,
    Cos,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Coord(usize),
    Func(Func, Expr),
    /// A multi-term sum kept unexpanded. Its leading coefficient is 1.
    Factor(Expr),
    Leaf(Leaf),
}

/// Sorted product of atom powers; exponents are never zero.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(Vec<(Atom, i32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn factors(&self) -> &[(Atom, i32)] {
        &self.0
    }

    fn from_map(map: BTreeMap<Atom, i32>) -> Monomial {
        // exp atoms merge into a single exp of the summed argument
        let mut exp_arg: Option<Expr> = None;
        let mut out = Vec::with_capacity(map.len());
        for (atom, e) in map {
            if e == 0 {
                continue;
            }
            match atom {
                Atom::Func(Func::Exp, arg) => {
                    let scaled = arg.scale(&Rational::from_integer(BigInt::from(e)));
                    exp_arg = Some(match exp_arg {
                        None => scaled,
                        Some(a) => a.add(&scaled),
                    });
                }
                other => out.push((other, e)),
            }
        }
        if let Some(arg) = exp_arg {
            if !arg.is_zero_structural() {
                out.push((Atom::Func(Func::Exp, arg), 1));
                out.sort_by(|a, b| a.0.cmp(&b.0));
            }
        }
        Monomial(out)
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        if self.is_one() {
            return other.clone();
        }
        if other.is_one() {
            return self.clone();
        }
        let has_exp = |m: &Monomial| m.0.iter().any(|(a, _)| matches!(a, Atom::Func(Func::Exp, _)));
        if !(has_exp(self) && has_exp(other)) {
            // merge two sorted lists
            let mut out = Vec::with_capacity(self.0.len() + other.0.len());
            let (mut i, mut j) = (0, 0);
            while i < self.0.len() && j < other.0.len() {
                match self.0[i].0.cmp(&other.0[j].0) {
                    std::cmp::Ordering::Less => {
                        out.push(self.0[i].clone());
                        i += 1;
                    }
                    std::cmp::Ordering::Greater => {
                        out.push(other.0[j].clone());
                        j += 1;
                    }
                    std::cmp::Ordering::Equal => {
                        let e = self.0[i].1 + other.0[j].1;
                        if e != 0 {
                            out.push((self.0[i].0.clone(), e));
                        }
                        i += 1;
                        j += 1;
                    }
                }
            }
            out.extend_from_slice(&self.0[i..]);
            out.extend_from_slice(&other.0[j..]);
            return Monomial(out);
        }
        let mut map: BTreeMap<Atom, i32> = BTreeMap::new();
        for (a, e) in self.0.iter().chain(other.0.iter()) {
            *map.entry(a.clone()).or_insert(0) += e;
        }
        Monomial::from_map(map)
    }

    fn inverse(&self) -> Monomial {
        let map = self.0.iter().map(|(a, e)| (a.clone(), -e)).collect();
        Monomial::from_map(map)
    }

    /// Largest coordinate index referenced, plus one.
    fn arity(&self) -> usize {
        self.0.iter().map(|(a, _)| a.arity()).max().unwrap_or(0)
    }
}

impl Atom {
    fn arity(&self) -> usize {
        match self {
            Atom::Coord(i) => i + 1,
            Atom::Func(_, e) | Atom::Factor(e) => e.arity(),
            Atom::Leaf(l) => l.args().iter().map(Expr::arity).max().unwrap_or(0),
        }
    }

    pub(crate) fn depends_on(&self, coord: usize) -> bool {
        match self {
            Atom::Coord(i) => *i == coord,
            Atom::Func(_, e) | Atom::Factor(e) => e.depends_on(coord),
            Atom::Leaf(l) => l.args().iter().any(|a| a.depends_on(coord)),
        }
    }

    fn is_smooth_algebraic(&self) -> bool {
        match self {
            Atom::Coord(_) => true,
            Atom::Factor(e) => e.is_rational_function(),
            _ => false,
        }
    }

    pub(crate) fn eval(&self, point: &[f64]) -> Result<f64, ExprError> {
        Ok(match self {
            Atom::Coord(i) => *point.get(*i).ok_or(ExprError::DimensionMismatch {
                need: i + 1,
                got: point.len(),
            })?,
            Atom::Func(f, e) => {
                let v = e.eval(point)?;
                match f {
                    Func::Exp => v.exp(),
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                }
            }
            Atom::Factor(e) => e.eval(point)?,
            Atom::Leaf(l) => l.eval(point)?,
        })
    }

    /// Derivative of the atom itself (not of a power of it).
    fn diff(&self, coord: usize) -> Result<Expr, ExprError> {
        match self {
            Atom::Coord(i) => Ok(if *i == coord { Expr::one() } else { Expr::zero() }),
            Atom::Func(f, arg) => {
                let da = arg.diff(coord)?;
                if da.is_zero_structural() {
                    return Ok(Expr::zero());
                }
                let outer = match f {
                    Func::Exp => Expr::func(Func::Exp, arg.clone()),
                    Func::Sin => Expr::func(Func::Cos, arg.clone()),
                    Func::Cos => Expr::func(Func::Sin, arg.clone()).neg(),
                };
                Ok(outer.mul(&da))
            }
            Atom::Factor(e) => e.diff(coord),
            Atom::Leaf(l) => {
                if l.args().iter().any(|a| a.depends_on(coord)) {
                    Err(ExprError::NonSmoothDerivative(l.name().to_string()))
                } else {
                    Ok(Expr::zero())
                }
            }
        }
    }
}

/// Canonical symbolic expression; cheap to clone.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expr(Arc<Vec<(Monomial, Rational)>>);

impl Default for Expr {
    fn default() -> Self {
        Expr::zero()
    }
}

fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

impl Expr {
    fn from_map(map: BTreeMap<Monomial, Rational>) -> Expr {
        Expr(Arc::new(
            map.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
        ))
    }

    /// Sum of already-sorted distinct terms.
    pub(crate) fn from_sorted_terms(terms: Vec<(Monomial, Rational)>) -> Expr {
        Expr(Arc::new(terms.into_iter().filter(|(_, c)| !c.is_zero()).collect()))
    }

    pub fn zero() -> Expr {
        Expr(Arc::new(Vec::new()))
    }

    pub fn one() -> Expr {
        Expr::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Expr {
        if c.is_zero() {
            Expr::zero()
        } else {
            Expr(Arc::new(vec![(Monomial::one(), c)]))
        }
    }

    pub fn int(n: i64) -> Expr {
        Expr::constant(rat(n))
    }

    pub fn ratio(n: i64, d: i64) -> Expr {
        Expr::constant(Rational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn coord(i: usize) -> Expr {
        Expr::atom(Atom::Coord(i), 1)
    }

    fn atom(a: Atom, e: i32) -> Expr {
        Expr(Arc::new(vec![(Monomial(vec![(a, e)]), Rational::one())]))
    }

    pub fn func(f: Func, arg: Expr) -> Expr {
        match f {
            Func::Exp if arg.is_zero_structural() => Expr::one(),
            Func::Sin if arg.is_zero_structural() => Expr::zero(),
            Func::Cos if arg.is_zero_structural() => Expr::one(),
            Func::Exp => Expr(Arc::new(vec![(
                Monomial::from_map([(Atom::Func(Func::Exp, arg), 1)].into_iter().collect()),
                Rational::one(),
            )])),
            _ => Expr::atom(Atom::Func(f, arg), 1),
        }
    }

    pub fn exp(arg: Expr) -> Expr {
        Expr::func(Func::Exp, arg)
    }

    pub fn sin(arg: Expr) -> Expr {
        Expr::func(Func::Sin, arg)
    }

    pub fn cos(arg: Expr) -> Expr {
        Expr::func(Func::Cos, arg)
    }

    pub fn leaf(leaf: Leaf) -> Expr {
        Expr::atom(Atom::Leaf(leaf), 1)
    }

    /// Keeps a sum as a single unexpanded factor so that later products with
    /// its reciprocal cancel exactly.
    pub fn factored(e: &Expr) -> Expr {
        match e.0.len() {
            0 | 1 => e.clone(),
            _ => {
                let lead = e.0[0].1.clone();
                let base = e.scale(&lead.recip());
                Expr::atom(Atom::Factor(base), 1).scale(&lead)
            }
        }
    }

    pub fn terms(&self) -> &[(Monomial, Rational)] {
        &self.0
    }

    pub fn is_zero_structural(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_constant(&self) -> Option<Rational> {
        match self.0.len() {
            0 => Some(Rational::zero()),
            1 if self.0[0].0.is_one() => Some(self.0[0].1.clone()),
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.as_constant().is_some()
    }

    pub fn add(&self, other: &Expr) -> Expr {
        if self.0.is_empty() {
            return other.clone();
        }
        if other.0.is_empty() {
            return self.clone();
        }
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let c = &a[i].1 + &b[j].1;
                    if !c.is_zero() {
                        out.push((a[i].0.clone(), c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Expr(Arc::new(out))
    }

    pub fn neg(&self) -> Expr {
        Expr(Arc::new(
            self.0.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        ))
    }

    pub fn sub(&self, other: &Expr) -> Expr {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Rational) -> Expr {
        if c.is_zero() {
            return Expr::zero();
        }
        if c.is_one() {
            return self.clone();
        }
        Expr(Arc::new(
            self.0.iter().map(|(m, k)| (m.clone(), k * c)).collect(),
        ))
    }

    pub fn mul(&self, other: &Expr) -> Expr {
        if self.0.is_empty() || other.0.is_empty() {
            return Expr::zero();
        }
        if let Some(c) = self.as_constant() {
            return other.scale(&c);
        }
        if let Some(c) = other.as_constant() {
            return self.scale(&c);
        }
        let mut map: BTreeMap<Monomial, Rational> = BTreeMap::new();
        for (ma, ca) in self.0.iter() {
            for (mb, cb) in other.0.iter() {
                let m = ma.mul(mb);
                let c = ca * cb;
                match map.get_mut(&m) {
                    Some(v) => *v += c,
                    None => {
                        map.insert(m, c);
                    }
                }
            }
        }
        Expr::from_map(map)
    }

    pub fn powi(&self, k: i32) -> Result<Expr, ExprError> {
        if k < 0 {
            return self.recip()?.powi(-k);
        }
        let mut acc = Expr::one();
        let mut base = self.clone();
        let mut k = k as u32;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        Ok(acc)
    }

    pub fn recip(&self) -> Result<Expr, ExprError> {
        match self.0.len() {
            0 => Err(ExprError::DivisionByZero),
            1 => {
                let (m, c) = &self.0[0];
                Ok(Expr(Arc::new(vec![(m.inverse(), c.recip())])))
            }
            _ => {
                if self.is_zero() == Tri::Yes {
                    return Err(ExprError::DivisionByZero);
                }
                let lead = self.0[0].1.clone();
                let base = self.scale(&lead.recip());
                Ok(Expr::atom(Atom::Factor(base), -1).scale(&lead.recip()))
            }
        }
    }

    pub fn div(&self, other: &Expr) -> Result<Expr, ExprError> {
        Ok(self.mul(&other.recip()?))
    }

    /// Number of chart slots the expression reads (max coordinate index + 1).
    pub fn arity(&self) -> usize {
        self.0.iter().map(|(m, _)| m.arity()).max().unwrap_or(0)
    }

    pub fn depends_on(&self, coord: usize) -> bool {
        self.0
            .iter()
            .any(|(m, _)| m.0.iter().any(|(a, _)| a.depends_on(coord)))
    }

    pub fn has_leaf(&self) -> bool {
        fn atom_has(a: &Atom) -> bool {
            match a {
                Atom::Leaf(_) => true,
                Atom::Coord(_) => false,
                Atom::Func(_, e) | Atom::Factor(e) => e.has_leaf(),
            }
        }
        self.0
            .iter()
            .any(|(m, _)| m.0.iter().any(|(a, _)| atom_has(a)))
    }

    /// True when only coordinates and factors of rational functions occur.
    pub fn is_rational_function(&self) -> bool {
        self.0
            .iter()
            .all(|(m, _)| m.0.iter().all(|(a, _)| a.is_smooth_algebraic()))
    }

    pub fn is_polynomial(&self) -> bool {
        self.0.iter().all(|(m, _)| {
            m.0.iter()
                .all(|(a, e)| matches!(a, Atom::Coord(_)) && *e > 0)
        })
    }

    /// Exact partial derivative with respect to chart slot `coord`.
    pub fn diff(&self, coord: usize) -> Result<Expr, ExprError> {
        let mut acc: BTreeMap<Monomial, Rational> = BTreeMap::new();
        let mut extra = Expr::zero();
        for (m, c) in self.0.iter() {
            for (idx, (atom, e)) in m.0.iter().enumerate() {
                if !atom.depends_on(coord) {
                    continue;
                }
                // d(a^e) = e a^(e-1) da ; the rest of the monomial is a cofactor
                let mut rest: Vec<(Atom, i32)> = m.0.clone();
                if *e == 1 {
                    rest.remove(idx);
                } else {
                    rest[idx].1 = e - 1;
                }
                let cofactor = Monomial(rest);
                let coef = c * rat(*e as i64);
                match atom {
                    Atom::Coord(_) => {
                        *acc.entry(cofactor).or_insert_with(Rational::zero) += coef;
                    }
                    Atom::Func(Func::Exp, arg) => {
                        // exp atoms carry exponent 1, so d(m) = m * d(arg)
                        let whole = Expr(Arc::new(vec![(m.clone(), coef)]));
                        extra = extra.add(&whole.mul(&arg.diff(coord)?));
                    }
                    _ => {
                        let da = atom.diff(coord)?;
                        let cof = Expr(Arc::new(vec![(cofactor, coef)]));
                        extra = extra.add(&cof.mul(&da));
                    }
                }
            }
        }
        Ok(Expr::from_map(acc).add(&extra))
    }

    /// Directional derivative `sum_i v_i * d/dx_i`.
    pub fn derivation(&self, field: &[Expr]) -> Result<Expr, ExprError> {
        let mut acc = Expr::zero();
        for (i, v) in field.iter().enumerate() {
            if v.is_zero_structural() || !self.depends_on(i) {
                continue;
            }
            acc = acc.add(&v.mul(&self.diff(i)?));
        }
        Ok(acc)
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64, ExprError> {
        let mut sum = 0.0;
        for (m, c) in self.0.iter() {
            let mut v = c.to_f64().unwrap_or(f64::NAN);
            for (a, e) in m.0.iter() {
                v *= a.eval(point)?.powi(*e);
            }
            sum += v;
        }
        if sum.is_finite() {
            Ok(sum)
        } else {
            Err(ExprError::NonFinite)
        }
    }

    /// Substitutes expressions for coordinates (slot `i` becomes `subs[i]`;
    /// slots past the end are left alone).
    pub fn substitute(&self, subs: &[Expr]) -> Result<Expr, ExprError> {
        let mut acc = Expr::zero();
        for (m, c) in self.0.iter() {
            let mut term = Expr::constant(c.clone());
            for (a, e) in m.0.iter() {
                let base = match a {
                    Atom::Coord(i) if *i < subs.len() => subs[*i].clone(),
                    Atom::Coord(i) => Expr::coord(*i),
                    Atom::Func(f, arg) => Expr::func(*f, arg.substitute(subs)?),
                    Atom::Factor(s) => Expr::factored(&s.substitute(subs)?),
                    Atom::Leaf(l) => Expr::leaf(l.substitute(subs)?),
                };
                term = term.mul(&base.powi(*e)?);
            }
            acc = acc.add(&term);
        }
        Ok(acc)
    }

    /// Fully expands every factor atom into a numerator/denominator pair of
    /// expressions in which only coordinates, functions and leaves occur.
    /// Clears denominators. Both parts are polynomials in coordinates and
    /// opaque function/leaf atoms, all with positive exponents.
    fn num_den(&self) -> (Expr, Expr) {
        let mut num = Expr::zero();
        let mut den = Expr::one();
        for (m, c) in self.0.iter() {
            let mut tn = Expr::constant(c.clone());
            let mut td = Expr::one();
            for (a, e) in m.0.iter() {
                let k = e.unsigned_abs() as i32;
                let (an, ad) = match a {
                    Atom::Factor(s) => s.num_den(),
                    other => (Expr::atom(other.clone(), 1), Expr::one()),
                };
                let (pn, pd) = if *e > 0 { (an, ad) } else { (ad, an) };
                tn = tn.mul(&pn.powi(k).expect("positive power"));
                td = td.mul(&pd.powi(k).expect("positive power"));
            }
            if td == den {
                num = num.add(&tn);
            } else {
                num = num.mul(&td).add(&tn.mul(&den));
                den = den.mul(&td);
            }
        }
        (num, den)
    }

    /// Exact for rational functions; transcendental expressions fall back to
    /// probing at 32 random points.
    pub fn is_zero(&self) -> Tri {
        if self.0.is_empty() {
            return Tri::Yes;
        }
        let (num, _) = self.num_den();
        if num.is_zero_structural() {
            return Tri::Yes;
        }
        if num.is_rational_function() {
            return Tri::No;
        }
        self.probe_zero()
    }

    fn probe_zero(&self) -> Tri {
        let n = self.arity();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_2e70);
        for _ in 0..32 {
            let p: Vec<f64> = (0..n)
                .map(|_| rng.gen_range(-997i64..=997) as f64 / 499.0)
                .collect();
            if let Ok(v) = self.eval(&p) {
                if v.abs() > 1e-9 {
                    return Tri::No;
                }
            }
        }
        Tri::Unknown
    }

    /// Canonical form. Function and leaf arguments are canonicalized
    /// recursively, denominators are cleared and numerator and denominator
    /// are reduced by their polynomial gcd. Unique on rational functions.
    pub fn canonical(&self) -> Expr {
        let inner = self.map_atoms(&|a| match a {
            Atom::Func(f, arg) => Expr::func(*f, arg.canonical()),
            Atom::Leaf(l) => Expr::leaf(l.map_args(Expr::canonical)),
            Atom::Factor(s) => Expr::factored(&s.canonical()),
            Atom::Coord(i) => Expr::coord(*i),
        });
        let (n, d) = inner.num_den();
        if n.is_zero_structural() {
            return Expr::zero();
        }
        if let Some(c) = d.as_constant() {
            return n.scale(&c.recip());
        }
        let mut vars: Vec<Atom> = Vec::new();
        let pn = n.to_poly(&mut vars);
        let pd = d.to_poly(&mut vars);
        let nv = vars.len();
        let (pn, pd) = (pn.widen(nv), pd.widen(nv));
        let g = poly::gcd(&pn, &pd);
        let pn = pn.div_exact(&g).expect("gcd divides numerator");
        let pd = pd.div_exact(&g).expect("gcd divides denominator");
        let n = Expr::from_poly(&pn, &vars);
        let d = Expr::from_poly(&pd, &vars);
        match d.0.len() {
            1 => n.mul(&d.recip().expect("nonzero denominator")),
            _ => {
                let lead = d.0[0].1.clone();
                let base = d.scale(&lead.recip());
                n.scale(&lead.recip()).mul(&Expr::atom(Atom::Factor(base), -1))
            }
        }
    }

    /// Rebuilds the expression with every atom replaced by `f(atom)`.
    fn map_atoms(&self, f: &dyn Fn(&Atom) -> Expr) -> Expr {
        let mut acc = Expr::zero();
        for (m, c) in self.0.iter() {
            let mut term = Expr::constant(c.clone());
            for (a, e) in m.0.iter() {
                term = term.mul(&f(a).powi(*e).expect("atom power"));
            }
            acc = acc.add(&term);
        }
        acc
    }

    fn to_poly(&self, vars: &mut Vec<Atom>) -> poly::Poly {
        let mut terms = Vec::new();
        for (m, c) in self.0.iter() {
            let mut exps: Vec<(usize, u32)> = Vec::new();
            for (a, e) in m.0.iter() {
                debug_assert!(*e > 0);
                let idx = match vars.iter().position(|v| v == a) {
                    Some(i) => i,
                    None => {
                        vars.push(a.clone());
                        vars.len() - 1
                    }
                };
                exps.push((idx, *e as u32));
            }
            terms.push((exps, c.clone()));
        }
        poly::Poly::sparse(terms)
    }

    fn from_poly(p: &poly::Poly, vars: &[Atom]) -> Expr {
        let mut acc = Expr::zero();
        for (exps, c) in p.terms() {
            let mut term = Expr::constant(c.clone());
            for (i, &k) in exps.iter().enumerate() {
                if k > 0 {
                    term = term.mul(&Expr::atom(vars[i].clone(), 1).powi(k as i32).expect("power"));
                }
            }
            acc = acc.add(&term);
        }
        acc
    }

    pub fn display<'a>(&'a self, names: &'a [String]) -> ExprDisplay<'a> {
        ExprDisplay { expr: self, names }
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display(&[]))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display(&[]))
    }
}

pub struct ExprDisplay<'a> {
    expr: &'a Expr,
    names: &'a [String],
}

fn coord_name(names: &[String], i: usize) -> String {
    names.get(i).cloned().unwrap_or_else(|| format!("x{i}"))
}

fn write_atom(out: &mut String, a: &Atom, names: &[String]) {
    match a {
        Atom::Coord(i) => out.push_str(&coord_name(names, *i)),
        Atom::Func(f, e) => {
            out.push_str(f.name());
            out.push('(');
            out.push_str(&e.display(names).to_string());
            out.push(')');
        }
        Atom::Factor(e) => {
            out.push_str("factor(");
            out.push_str(&e.display(names).to_string());
            out.push(')');
        }
        Atom::Leaf(l) => {
            out.push_str(l.name());
            out.push('(');
            let args: Vec<String> = l.args().iter().map(|a| a.display(names).to_string()).collect();
            out.push_str(&args.join(", "));
            out.push(')');
        }
    }
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.expr.0.is_empty() {
            return write!(f, "0");
        }
        let mut s = String::new();
        for (k, (m, c)) in self.expr.0.iter().enumerate() {
            let negative = c.is_negative();
            let mag = c.abs();
            if k == 0 {
                if negative {
                    s.push('-');
                }
            } else if negative {
                s.push_str(" - ");
            } else {
                s.push_str(" + ");
            }
            let mut parts: Vec<String> = Vec::new();
            if !mag.is_one() || m.is_one() {
                parts.push(if mag.is_integer() {
                    mag.numer().to_string()
                } else {
                    format!("{}/{}", mag.numer(), mag.denom())
                });
            }
            for (a, e) in m.0.iter() {
                let mut t = String::new();
                write_atom(&mut t, a, self.names);
                if *e != 1 {
                    if *e < 0 {
                        t = format!("{t}^({e})");
                    } else {
                        t = format!("{t}^{e}");
                    }
                }
                parts.push(t);
            }
            s.push_str(&parts.join("*"));
        }
        f.write_str(&s)
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Self {
        Expr::int(n)
    }
}

#[cfg(test)]
mod tests;
