//! Tensor Gauss-Legendre integration of symbolic integrands, evaluated
//! monomial by monomial.
//!
//! Atoms of a monomial are grouped by the coordinate axes they depend on;
//! each group is summed over its own tensor sub-grid and the groups are
//! multiplied. This is the same tensor rule as a full grid, at a cost of
//! `sum_g n^|g|` instead of `n^dim` per monomial.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use num_complex::Complex64;

use super::AxisRule;
use crate::error::Result;
use crate::symexpr::{Atom, CExpr, Expr, Func};

type C = Complex64;
type Key = (Vec<usize>, Atom, i32);

pub struct SeparableIntegrator {
    pub rules: Vec<AxisRule>,
    lengths: Vec<f64>,
    cache: RwLock<HashMap<Key, Arc<Vec<f64>>>>,
}

impl SeparableIntegrator {
    pub fn new(rules: Vec<AxisRule>) -> SeparableIntegrator {
        let lengths = rules.iter().map(|r| r.weights.iter().sum()).collect();
        SeparableIntegrator {
            rules,
            lengths,
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn dim(&self) -> usize {
        self.rules.len()
    }

    fn group_points(&self, axes: &[usize]) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut pts = vec![vec![0.0; self.dim()]];
        let mut ws = vec![1.0];
        for &a in axes {
            let r = &self.rules[a];
            let mut np = Vec::with_capacity(pts.len() * r.len());
            let mut nw = Vec::with_capacity(pts.len() * r.len());
            for (p, w) in pts.iter().zip(&ws) {
                for (x, wx) in r.nodes.iter().zip(&r.weights) {
                    let mut q = p.clone();
                    q[a] = *x;
                    np.push(q);
                    nw.push(w * wx);
                }
            }
            pts = np;
            ws = nw;
        }
        (pts, ws)
    }

    fn values(&self, axes: &[usize], atom: &Atom, pow: i32, pts: &[Vec<f64>]) -> Result<Arc<Vec<f64>>> {
        let key = (axes.to_vec(), atom.clone(), pow);
        if let Some(v) = self.cache.read().expect("cache lock").get(&key) {
            return Ok(v.clone());
        }
        let vals = pts
            .iter()
            .map(|p| atom.eval(p).map(|v| v.powi(pow)))
            .collect::<Result<Vec<_>, _>>()?;
        let vals = Arc::new(vals);
        self.cache.write().expect("cache lock").insert(key, vals.clone());
        Ok(vals)
    }

    pub fn integrate(&self, e: &Expr) -> Result<f64> {
        let n = self.dim();
        let mut total = 0.0;
        for (mono, coef) in e.terms() {
            let factors = split_exp(mono.factors(), n);
            // union of axis sets, as groups of atom indices
            let mut groups: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
            let mut scalar = 1.0;
            for (idx, (atom, pow)) in factors.iter().enumerate() {
                let axes = axes_of(atom, n);
                if axes.is_empty() {
                    scalar *= atom.eval(&vec![0.0; n])?.powi(*pow);
                    continue;
                }
                let mut merged = (axes, vec![idx]);
                groups.retain(|g| {
                    if g.0.iter().any(|a| merged.0.contains(a)) {
                        merged.0.extend(g.0.iter().copied());
                        merged.1.extend(g.1.iter().copied());
                        false
                    } else {
                        true
                    }
                });
                merged.0.sort_unstable();
                merged.0.dedup();
                groups.push(merged);
            }
            let mut used = vec![false; n];
            let mut value = scalar * num_traits::ToPrimitive::to_f64(coef).unwrap_or(f64::NAN);
            for (axes, atoms) in &groups {
                for a in axes {
                    used[*a] = true;
                }
                let (pts, ws) = self.group_points(axes);
                let mut acc = ws.clone();
                for &i in atoms {
                    let (atom, pow) = &factors[i];
                    let v = self.values(axes, atom, *pow, &pts)?;
                    acc.iter_mut().zip(v.iter()).for_each(|(a, b)| *a *= b);
                }
                value *= acc.iter().sum::<f64>();
            }
            for (a, u) in used.iter().enumerate() {
                if !u {
                    value *= self.lengths[a];
                }
            }
            total += value;
        }
        Ok(total)
    }

    pub fn integrate_c(&self, e: &CExpr) -> Result<C> {
        Ok(C::new(self.integrate(&e.re)?, self.integrate(&e.im)?))
    }
}

fn axes_of(atom: &Atom, n: usize) -> Vec<usize> {
    (0..n).filter(|i| atom.depends_on(*i)).collect()
}

/// Splits `exp(a + b)` into `exp(a) exp(b)` along groups of axes, so that a
/// product of per-axis exponentials stays separable.
fn split_exp(factors: &[(Atom, i32)], n: usize) -> Vec<(Atom, i32)> {
    let mut out = Vec::with_capacity(factors.len());
    for (atom, pow) in factors {
        let Atom::Func(Func::Exp, arg) = atom else {
            out.push((atom.clone(), *pow));
            continue;
        };
        let mut parts: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
        for (t, (m, _)) in arg.terms().iter().enumerate() {
            let mut axes: Vec<usize> = m.factors().iter().flat_map(|(a, _)| axes_of(a, n)).collect();
            let mut idx = vec![t];
            parts.retain(|p| {
                if p.0.iter().any(|a| axes.contains(a)) {
                    axes.extend(p.0.iter().copied());
                    idx.extend(p.1.iter().copied());
                    false
                } else {
                    true
                }
            });
            axes.sort_unstable();
            axes.dedup();
            parts.push((axes, idx));
        }
        for (_, mut idx) in parts {
            idx.sort_unstable();
            let terms = idx.iter().map(|i| arg.terms()[*i].clone()).collect();
            out.push((Atom::Func(Func::Exp, Expr::from_sorted_terms(terms)), *pow));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::{Leaf, Rational};

    #[test]
    fn matches_full_tensor_grid() {
        let rules: Vec<AxisRule> = (0..3).map(|_| AxisRule::new(-1.0, 1.0, 6, &[])).collect();
        let grid = super::super::TensorGrid::new(rules.clone());
        let si = SeparableIntegrator::new(rules);
        let x = Expr::coord;
        let den = Expr::one().add(&x(0).mul(&x(0))).add(&x(1).mul(&x(1)));
        let e = x(0)
            .mul(&x(0))
            .mul(&x(2))
            .add(&Expr::exp(x(1)).mul(&x(2)).mul(&x(2)))
            .add(&den.recip().unwrap().mul(&x(2)).mul(&x(2)))
            .add(&Expr::exp(x(0).mul(&x(0)).add(&x(2))).mul(&x(1)))
            .add(&Expr::constant(Rational::new(3.into(), 7.into())));
        let mut full = 0.0;
        for i in 0..grid.len() {
            let (p, w) = grid.point(i);
            full += w * e.eval(&p).unwrap();
        }
        let sep = si.integrate(&e).unwrap();
        assert!((full - sep).abs() < 1e-12, "{full} {sep}");
    }

    #[test]
    fn kink_split_is_exact_for_abs() {
        let x = Expr::coord;
        let abs = Expr::leaf(Leaf::builtin("abs", vec![x(0)]).unwrap());
        // int_{-1}^{1} |x| (1 + x + x^2) dx = 1 + 1/2
        let e = abs.mul(&Expr::one().add(&x(0)).add(&x(0).mul(&x(0))));
        let si = SeparableIntegrator::new(vec![AxisRule::new(-1.0, 1.0, 8, &[0.0])]);
        assert!((si.integrate(&e).unwrap() - 1.5).abs() < 1e-14);
    }
}
