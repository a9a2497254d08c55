//! Sparse multivariate polynomials over the rationals, used to reduce
//! rational expressions to lowest terms.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};

type Exps = Vec<u32>;

/// Terms keyed by exponent vector; the map order is lexicographic, so the
/// last entry is the leading term.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Poly {
    nvars: usize,
    terms: BTreeMap<Exps, BigRational>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Poly {
        Poly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: BigRational) -> Poly {
        let mut p = Poly::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Exps, BigRational)>) -> Poly {
        let mut p = Poly::zero(nvars);
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    /// Builds from `(var index, exponent)` lists; `nvars` is the smallest
    /// that fits, use [`Poly::widen`] to share a variable set.
    pub fn sparse(terms: Vec<(Vec<(usize, u32)>, BigRational)>) -> Poly {
        let nvars = terms
            .iter()
            .flat_map(|(e, _)| e.iter().map(|(i, _)| i + 1))
            .max()
            .unwrap_or(0);
        Poly::from_terms(
            nvars,
            terms.into_iter().map(|(e, c)| {
                let mut v = vec![0; nvars];
                for (i, k) in e {
                    v[i] += k;
                }
                (v, c)
            }),
        )
    }

    pub fn widen(&self, nvars: usize) -> Poly {
        Poly {
            nvars,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| {
                    let mut e = e.clone();
                    e.resize(nvars, 0);
                    (e, c.clone())
                })
                .collect(),
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exps, &BigRational)> {
        self.terms.iter()
    }

    fn add_term(&mut self, e: Exps, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&e) {
            Some(v) => {
                *v += c;
                if v.is_zero() {
                    self.terms.remove(&e);
                }
            }
            None => {
                self.terms.insert(e, c);
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|e| e.iter().all(|&k| k == 0))
    }

    fn lead(&self) -> Option<(&Exps, &BigRational)> {
        self.terms.iter().next_back()
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let mut r = self.clone();
        for (e, c) in &o.terms {
            r.add_term(e.clone(), c.clone());
        }
        r
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        let mut r = self.clone();
        for (e, c) in &o.terms {
            r.add_term(e.clone(), -c.clone());
        }
        r
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut r = Poly::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &o.terms {
                let e: Exps = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                r.add_term(e, ca * cb);
            }
        }
        r
    }

    pub fn scale(&self, c: &BigRational) -> Poly {
        if c.is_zero() {
            return Poly::zero(self.nvars);
        }
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, k)| (e.clone(), k * c)).collect(),
        }
    }

    /// Makes the leading coefficient 1.
    pub fn monic(&self) -> Poly {
        match self.lead() {
            Some((_, c)) => self.scale(&c.recip()),
            None => self.clone(),
        }
    }

    /// Exact division; `None` if `d` does not divide `self`.
    pub fn div_exact(&self, d: &Poly) -> Option<Poly> {
        let (ld, lc) = d.lead()?;
        let (ld, lc) = (ld.clone(), lc.clone());
        let mut rem = self.clone();
        let mut q = Poly::zero(self.nvars);
        while let Some((lr, cr)) = rem.lead() {
            if lr.iter().zip(&ld).any(|(a, b)| a < b) {
                return None;
            }
            let e: Exps = lr.iter().zip(&ld).map(|(a, b)| a - b).collect();
            let c = cr / &lc;
            let t = Poly::from_terms(self.nvars, [(e, c)]);
            rem = rem.sub(&t.mul(d));
            q = q.add(&t);
        }
        Some(q)
    }

    fn degree_in(&self, v: usize) -> u32 {
        self.terms.keys().map(|e| e[v]).max().unwrap_or(0)
    }

    fn coeff_in(&self, v: usize, d: u32) -> Poly {
        Poly::from_terms(
            self.nvars,
            self.terms.iter().filter(|(e, _)| e[v] == d).map(|(e, c)| {
                let mut e = e.clone();
                e[v] = 0;
                (e, c.clone())
            }),
        )
    }

    fn main_var(&self) -> Option<usize> {
        (0..self.nvars).rev().find(|&v| self.degree_in(v) > 0)
    }

    fn shift(&self, v: usize, s: u32) -> Poly {
        Poly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| {
                    let mut e = e.clone();
                    e[v] += s;
                    (e, c.clone())
                })
                .collect(),
        }
    }

    fn content_in(&self, v: usize) -> Poly {
        let mut g = Poly::zero(self.nvars);
        for d in 0..=self.degree_in(v) {
            let c = self.coeff_in(v, d);
            if !c.is_zero() {
                g = gcd(&g, &c);
                if g.is_constant() {
                    break;
                }
            }
        }
        g
    }

    fn primitive_in(&self, v: usize) -> Poly {
        let c = self.content_in(v);
        self.div_exact(&c).expect("content divides")
    }

    fn prem(&self, b: &Poly, v: usize) -> Poly {
        let db = b.degree_in(v);
        let lb = b.coeff_in(v, db);
        let mut r = self.clone();
        while !r.is_zero() && r.degree_in(v) >= db {
            let dr = r.degree_in(v);
            let lr = r.coeff_in(v, dr);
            r = r.mul(&lb).sub(&b.mul(&lr).shift(v, dr - db));
        }
        r
    }
}

/// Greatest common divisor, normalized to be monic. `gcd(0, 0) = 0`.
pub(crate) fn gcd(a: &Poly, b: &Poly) -> Poly {
    let n = a.nvars;
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() {
        return a.monic();
    }
    if a.is_constant() || b.is_constant() {
        return Poly::constant(n, BigRational::one());
    }
    let v = match (a.main_var(), b.main_var()) {
        (Some(x), Some(y)) => x.max(y),
        _ => return Poly::constant(n, BigRational::one()),
    };
    if a.degree_in(v) == 0 {
        return gcd(a, &b.content_in(v));
    }
    if b.degree_in(v) == 0 {
        return gcd(&a.content_in(v), b);
    }
    let c = gcd(&a.content_in(v), &b.content_in(v));
    let mut p = a.primitive_in(v);
    let mut q = b.primitive_in(v);
    if p.degree_in(v) < q.degree_in(v) {
        std::mem::swap(&mut p, &mut q);
    }
    loop {
        let r = p.prem(&q, v);
        if r.is_zero() {
            break;
        }
        if r.degree_in(v) == 0 {
            q = Poly::constant(n, BigRational::one());
            break;
        }
        p = q;
        q = r.primitive_in(v);
    }
    q.primitive_in(v).mul(&c).monic()
}
