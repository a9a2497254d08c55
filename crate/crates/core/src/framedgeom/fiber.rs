//! Pointwise linear algebra: orthonormal adapted frames, the map `phi`,
//! its image `F_phi` and the projector onto `Q`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{lie_bracket, Scenario};
use crate::error::{Error, Result};
use crate::exterior::{grade, grade_projector, wedge_pair_sign, Mask};

type C = Complex64;

const RANK_TOL: f64 = 1e-9;

fn c(x: f64) -> C {
    C::new(x, 0.0)
}

/// Matrix of the map induced on the exterior algebra by
/// `e^i -> sum_a l[(i, a)] u^a`; column `I` holds `e^I` on the `u` basis.
pub fn exterior_power(n: usize, l: &DMatrix<C>) -> DMatrix<C> {
    let dim = 1usize << n;
    let mut out = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let mut acc = vec![c(0.0); dim];
        acc[0] = c(1.0);
        for i in 0..n {
            if col & (1 << i) == 0 {
                continue;
            }
            let mut next = vec![c(0.0); dim];
            for (mask, v) in acc.iter().enumerate() {
                if v.norm() == 0.0 {
                    continue;
                }
                for a in 0..n {
                    let lv = l[(i, a)];
                    if lv.norm() == 0.0 || mask & (1 << a) != 0 {
                        continue;
                    }
                    let s = wedge_pair_sign(mask as Mask, 1 << a);
                    next[mask | (1 << a)] += *v * lv * s;
                }
            }
            acc = next;
        }
        for (row, v) in acc.into_iter().enumerate() {
            out[(row, col)] = v;
        }
    }
    out
}

/// Fiber data at one point. Matrices on the exterior algebra act on
/// coefficient vectors in the orthonormal coframe `u^I` unless noted.
#[derive(Debug, Clone)]
pub struct FiberData {
    pub point: Vec<f64>,
    pub n: usize,
    pub m: Option<usize>,
    pub w_mask: Mask,
    /// Frame on the derivation basis, rows are fields.
    pub frame: DMatrix<C>,
    pub gram: DMatrix<C>,
    /// `u_i = sum_k ortho[(i, k)] e_k`, Gram-Schmidt with `W` first.
    pub ortho: DMatrix<C>,
    /// Coefficients on `e^I` to coefficients on `u^I`.
    pub to_ortho: DMatrix<C>,
    pub from_ortho: DMatrix<C>,
    /// `phi(u^a)` for each annihilator index `a`, as exterior vectors.
    pub phi: Vec<(usize, DVector<C>)>,
    pub f_phi: DMatrix<C>,
    /// Rank of `F_phi` in each grade.
    pub f_phi_ranks: Vec<usize>,
    pub pi_w: DMatrix<C>,
    pub pi_q: DMatrix<C>,
}

impl FiberData {
    pub fn dim(&self) -> usize {
        1 << self.n
    }

    /// Indices of the `W`-part of the orthonormal frame of holomorphic
    /// type (all of `W` on a real chart).
    pub fn w_hol(&self) -> Vec<usize> {
        let lim = self.m.unwrap_or(self.n);
        (0..lim).filter(|i| self.w_mask & (1 << i) != 0).collect()
    }

    /// Annihilator indices of holomorphic type.
    pub fn n_hol(&self) -> Vec<usize> {
        let lim = self.m.unwrap_or(self.n);
        (0..lim).filter(|i| self.w_mask & (1 << i) == 0).collect()
    }

    /// Expresses an orthonormal-basis operator on the `e^I` basis.
    pub fn to_frame_basis(&self, op: &DMatrix<C>) -> DMatrix<C> {
        &self.from_ortho * op * &self.to_ortho
    }

    /// Rank of `Q` in each grade.
    pub fn q_ranks(&self) -> Vec<usize> {
        let mut r = vec![0; self.n + 1];
        let tr = |k: usize| -> f64 {
            (0..self.dim())
                .filter(|i| grade(*i as Mask) == k)
                .map(|i| self.pi_q[(i, i)].re)
                .sum()
        };
        for (k, slot) in r.iter_mut().enumerate() {
            *slot = tr(k).round() as usize;
        }
        r
    }

    pub fn check_ranks(&self, expected: &[usize]) -> Result<()> {
        if self.f_phi_ranks != expected {
            return Err(Error::RankDrop {
                what: format!("F_phi (ranks {:?}, expected {:?})", self.f_phi_ranks, expected),
                point: self.point.clone(),
            });
        }
        Ok(())
    }

    /// The covector `xi` (real slots) in the orthonormal coframe: entry
    /// `k` is `xi(u_k)`.
    pub fn covector(&self, s: &Scenario, xi: &[f64]) -> Result<Vec<C>> {
        let on_frame = s.covector_on_frame(&self.point, xi)?;
        let v = DVector::from_vec(on_frame);
        Ok((&self.ortho * v).iter().copied().collect())
    }
}

fn gram_schmidt(g: &DMatrix<C>, order: &[usize]) -> Result<DMatrix<C>> {
    let n = g.nrows();
    let mut r = DMatrix::<C>::zeros(n, n);
    let inner = |a: &DVector<C>, b: &DVector<C>| -> C {
        let mut acc = c(0.0);
        for k in 0..n {
            for l in 0..n {
                acc += a[k] * g[(k, l)] * b[l].conj();
            }
        }
        acc
    };
    let mut done: Vec<DVector<C>> = Vec::new();
    for &idx in order {
        let mut v = DVector::<C>::zeros(n);
        v[idx] = c(1.0);
        for u in &done {
            let p = inner(&v, u);
            v -= u * p;
        }
        let norm = inner(&v, &v).re;
        if !(norm > 1e-300) {
            return Err(Error::DegenerateMetric);
        }
        v /= c(norm.sqrt());
        r.set_row(idx, &v.transpose());
        done.push(v);
    }
    Ok(r)
}

/// Pointwise fiber data of `s` at `x`.
pub fn fiber_projectors(s: &Scenario, x: &[f64]) -> Result<FiberData> {
    let n = s.n();
    let m = s.m();
    let w_mask = s.w_mask();
    let frame = s.frame_matrix(x)?;
    let gram = s.gram_matrix(x)?;
    let hol = m.unwrap_or(n);
    let mut order: Vec<usize> = (0..hol).filter(|i| w_mask & (1 << i) != 0).collect();
    order.extend((0..hol).filter(|i| w_mask & (1 << i) == 0));
    let ortho = match m {
        None => gram_schmidt(&gram, &order)?,
        Some(m) => {
            let gh = gram.view((0, 0), (m, m)).into_owned();
            let rh = gram_schmidt(&gh, &order)?;
            let mut r = DMatrix::zeros(n, n);
            r.view_mut((0, 0), (m, m)).copy_from(&rh);
            r.view_mut((m, m), (m, m)).copy_from(&rh.map(|z| z.conj()));
            r
        }
    };
    let r_inv = ortho
        .clone()
        .try_inverse()
        .ok_or(Error::DegenerateMetric)?;
    let to_ortho = exterior_power(n, &ortho.transpose());
    let from_ortho = to_ortho
        .clone()
        .try_inverse()
        .ok_or(Error::DegenerateMetric)?;

    let w_hol: Vec<usize> = order.iter().copied().filter(|i| w_mask & (1 << i) != 0).collect();
    let n_hol: Vec<usize> = order.iter().copied().filter(|i| w_mask & (1 << i) == 0).collect();

    // structure functions at x
    let mut cs = vec![vec![vec![c(0.0); n]; n]; n];
    for (k, ck) in cs.iter_mut().enumerate() {
        for (i, row) in ck.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let e = s.structure(k, i, j);
                if !e.is_zero_structural() {
                    *v = e.eval(x)?;
                }
            }
        }
    }
    let phi = phi_from(n, &w_hol, &n_hol, &ortho, &r_inv, |k, l, mm| cs[mm][k][l]);

    let w_hol_mask: Mask = w_hol.iter().fold(0, |a, i| a | (1 << i));
    let f_phi_ranks_and_proj = image_projector(n, &phi, w_hol_mask);
    let (f_phi, f_phi_ranks) = f_phi_ranks_and_proj;

    let pi_w = grade_projector(n, |mask| mask & !w_mask == 0);
    let pi_q = match m {
        None => &pi_w - &f_phi,
        Some(m) => {
            let pw_hol = grade_projector(n, |mask| mask & !w_hol_mask == 0);
            let perp = &pw_hol - &f_phi;
            let low = (1usize << m) - 1;
            let dim = 1usize << n;
            let mut q = DMatrix::zeros(dim, dim);
            for j in 0..dim {
                for i in 0..dim {
                    let a = perp[(j & low, i & low)];
                    if a.norm() == 0.0 {
                        continue;
                    }
                    let b = perp[(j >> m, i >> m)].conj();
                    q[(j, i)] = a * b;
                }
            }
            q
        }
    };

    Ok(FiberData {
        point: x.to_vec(),
        n,
        m,
        w_mask,
        frame,
        gram,
        ortho,
        to_ortho,
        from_ortho,
        phi,
        f_phi,
        f_phi_ranks,
        pi_w,
        pi_q,
    })
}

/// `phi(u^a)_{ij} = -u^a([u_i, u_j])` with `[e_k, e_l] = sum_m br(k,l,m) e_m`.
fn phi_from(
    n: usize,
    w: &[usize],
    ann: &[usize],
    r: &DMatrix<C>,
    r_inv: &DMatrix<C>,
    br: impl Fn(usize, usize, usize) -> C,
) -> Vec<(usize, DVector<C>)> {
    let dim = 1usize << n;
    let mut out = Vec::new();
    for &a in ann {
        let mut v = DVector::<C>::zeros(dim);
        for (pi, &i) in w.iter().enumerate() {
            for &j in &w[pi + 1..] {
                let (lo, hi) = if i < j { (i, j) } else { (j, i) };
                let sgn = if i < j { 1.0 } else { -1.0 };
                let mut acc = c(0.0);
                for k in 0..n {
                    let rik = r[(i, k)];
                    if rik.norm() == 0.0 {
                        continue;
                    }
                    for l in 0..n {
                        let rjl = r[(j, l)];
                        if rjl.norm() == 0.0 {
                            continue;
                        }
                        for mm in 0..n {
                            let b = br(k, l, mm);
                            if b.norm() != 0.0 {
                                acc += rik * rjl * b * r_inv[(mm, a)];
                            }
                        }
                    }
                }
                v[(1 << lo) | (1 << hi)] -= acc * sgn;
            }
        }
        out.push((a, v));
    }
    out
}

/// Projector onto the span of `phi(u^a) ∧ u^J` for `J` inside `w_mask`,
/// and its rank in each grade.
fn image_projector(n: usize, phi: &[(usize, DVector<C>)], w_mask: Mask) -> (DMatrix<C>, Vec<usize>) {
    let dim = 1usize << n;
    let mut proj = DMatrix::zeros(dim, dim);
    let mut ranks = vec![0; n + 1];
    let subsets: Vec<usize> = (0..dim).filter(|j| (*j as Mask) & !w_mask == 0).collect();
    for k in 2..=n {
        let mut gens: Vec<DVector<C>> = Vec::new();
        for (_, p) in phi {
            for &j in &subsets {
                if grade(j as Mask) + 2 != k {
                    continue;
                }
                let mut v = DVector::<C>::zeros(dim);
                for i in 0..dim {
                    if p[i].norm() == 0.0 || i & j != 0 {
                        continue;
                    }
                    v[i | j] += p[i] * wedge_pair_sign(i as Mask, j as Mask);
                }
                if v.norm() > 0.0 {
                    gens.push(v);
                }
            }
        }
        if gens.is_empty() {
            continue;
        }
        let a = DMatrix::from_columns(&gens);
        let svd = a.svd(true, false);
        let u = svd.u.expect("left singular vectors");
        let r = svd.singular_values.iter().filter(|s| **s > RANK_TOL).count();
        ranks[k] = r;
        for col in 0..r {
            let v = u.column(col);
            proj += &v * v.adjoint();
        }
    }
    (proj, ranks)
}

/// `phi` computed from symbolic brackets of the frame, converted to the
/// frame with a numeric inverse. Independent of the stored structure
/// functions; used as a cross-check.
pub fn phi_via_brackets(s: &Scenario, x: &[f64]) -> Result<Vec<(usize, DVector<C>)>> {
    let fd = fiber_projectors(s, x)?;
    let n = s.n();
    let e_inv = fd
        .frame
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::FrameNotInvertible(format!("at {x:?}")))?;
    let r_inv = fd.ortho.clone().try_inverse().ok_or(Error::DegenerateMetric)?;
    let mut br = vec![vec![vec![c(0.0); n]; n]; n];
    for k in 0..n {
        for l in (k + 1)..n {
            let b = lie_bracket(s.chart, &s.frame[k], &s.frame[l])?.eval(x)?;
            let row = DVector::from_vec(b).transpose() * &e_inv;
            for mm in 0..n {
                br[k][l][mm] = row[mm];
                br[l][k][mm] = -row[mm];
            }
        }
    }
    let hol = s.m().unwrap_or(n);
    let w: Vec<usize> = (0..hol).filter(|i| fd.w_mask & (1 << i) != 0).collect();
    let ann: Vec<usize> = (0..hol).filter(|i| fd.w_mask & (1 << i) == 0).collect();
    Ok(phi_from(n, &w, &ann, &fd.ortho, &r_inv, |k, l, mm| br[k][l][mm]))
}
