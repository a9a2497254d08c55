//! Flattened evaluators for batches of expressions.
//!
//! Atoms shared between expressions are evaluated once per point, which
//! matters for quadrature where the same frame coefficients appear in many
//! matrix entries.

use std::collections::HashMap;

use num_complex::Complex64;
use num_traits::ToPrimitive;

use super::{Atom, CExpr, Expr, ExprError, Func, LeafFn};

type Sum = Vec<(f64, Vec<(usize, i32)>)>;

enum Code {
    Coord(usize),
    Func(Func, Sum),
    Factor(Sum),
    Leaf(LeafFn, Vec<Sum>),
}

#[derive(Default)]
struct Builder {
    codes: Vec<Code>,
    index: HashMap<Atom, usize>,
}

impl Builder {
    fn sum(&mut self, e: &Expr) -> Result<Sum, ExprError> {
        let mut out = Vec::with_capacity(e.terms().len());
        for (m, c) in e.terms() {
            let mut fs = Vec::with_capacity(m.factors().len());
            for (a, k) in m.factors() {
                fs.push((self.atom(a)?, *k));
            }
            out.push((c.to_f64().unwrap_or(f64::NAN), fs));
        }
        Ok(out)
    }

    fn atom(&mut self, a: &Atom) -> Result<usize, ExprError> {
        if let Some(&i) = self.index.get(a) {
            return Ok(i);
        }
        let code = match a {
            Atom::Coord(i) => Code::Coord(*i),
            Atom::Func(f, arg) => Code::Func(*f, self.sum(arg)?),
            Atom::Factor(s) => Code::Factor(self.sum(s)?),
            Atom::Leaf(l) => {
                let f = l
                    .evaluator()
                    .cloned()
                    .ok_or_else(|| ExprError::UnboundLeaf(l.name().to_string()))?;
                let args = l.args().iter().map(|x| self.sum(x)).collect::<Result<_, _>>()?;
                Code::Leaf(f, args)
            }
        };
        self.codes.push(code);
        let i = self.codes.len() - 1;
        self.index.insert(a.clone(), i);
        Ok(i)
    }
}

fn eval_sum(s: &Sum, slots: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (c, fs) in s {
        let mut v = *c;
        for &(i, k) in fs {
            v *= if k == 1 { slots[i] } else { slots[i].powi(k) };
        }
        acc += v;
    }
    acc
}

/// A batch of real expressions compiled for repeated numeric evaluation.
pub struct CompiledExpr {
    codes: Vec<Code>,
    outputs: Vec<Sum>,
    arity: usize,
}

impl CompiledExpr {
    pub fn new(exprs: &[Expr]) -> Result<CompiledExpr, ExprError> {
        let mut b = Builder::default();
        let outputs = exprs.iter().map(|e| b.sum(e)).collect::<Result<_, _>>()?;
        let arity = exprs.iter().map(Expr::arity).max().unwrap_or(0);
        Ok(CompiledExpr {
            codes: b.codes,
            outputs,
            arity,
        })
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    /// Evaluates every expression at `point` into `out`.
    pub fn eval_into(&self, point: &[f64], out: &mut [f64]) -> Result<(), ExprError> {
        if point.len() < self.arity {
            return Err(ExprError::DimensionMismatch {
                need: self.arity,
                got: point.len(),
            });
        }
        let mut slots = Vec::with_capacity(self.codes.len());
        for code in &self.codes {
            let v = match code {
                Code::Coord(i) => point[*i],
                Code::Func(f, s) => {
                    let x = eval_sum(s, &slots);
                    match f {
                        Func::Exp => x.exp(),
                        Func::Sin => x.sin(),
                        Func::Cos => x.cos(),
                    }
                }
                Code::Factor(s) => eval_sum(s, &slots),
                Code::Leaf(f, args) => {
                    let a: Vec<f64> = args.iter().map(|s| eval_sum(s, &slots)).collect();
                    f(&a)
                }
            };
            slots.push(v);
        }
        for (o, s) in out.iter_mut().zip(&self.outputs) {
            *o = eval_sum(s, &slots);
            if !o.is_finite() {
                return Err(ExprError::NonFinite);
            }
        }
        Ok(())
    }

    pub fn eval(&self, point: &[f64]) -> Result<Vec<f64>, ExprError> {
        let mut out = vec![0.0; self.outputs.len()];
        self.eval_into(point, &mut out)?;
        Ok(out)
    }
}

/// A batch of complex expressions compiled for repeated evaluation.
pub struct CompiledCExpr {
    inner: CompiledExpr,
}

impl CompiledCExpr {
    pub fn new(exprs: &[CExpr]) -> Result<CompiledCExpr, ExprError> {
        let flat: Vec<Expr> = exprs
            .iter()
            .flat_map(|e| [e.re.clone(), e.im.clone()])
            .collect();
        Ok(CompiledCExpr {
            inner: CompiledExpr::new(&flat)?,
        })
    }

    pub fn len(&self) -> usize {
        self.inner.len() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.inner.is_empty()
    }

    pub fn eval(&self, point: &[f64]) -> Result<Vec<Complex64>, ExprError> {
        let flat = self.inner.eval(point)?;
        Ok(flat
            .chunks_exact(2)
            .map(|c| Complex64::new(c[0], c[1]))
            .collect())
    }
}
