//! First-order symbol of `[del_Q, delbar_Q*]` and the involutivity verdict.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::second::{globalize, ProjectorJet};
use super::HermitianData;
use crate::error::{Error, Result};
use crate::exterior::{grade, wedge_covector_matrix, Mask};
use crate::framedgeom::{fiber_projectors, sample_points, FiberData, Scenario};
use crate::symexpr::Tri;

type C = Complex64;

fn unit(n: usize, k: usize) -> Vec<C> {
    let mut v = vec![C::new(0.0, 0.0); n];
    v[k] = C::new(1.0, 0.0);
    v
}

/// `b[a][j][k] = u^a([u_j, u_k])` for `a` normal and `j, k` in `W`, all
/// holomorphic, from the structure functions at the fiber's point.
pub fn bracket_coefficients(s: &Scenario, fd: &FiberData) -> Result<Vec<Vec<Vec<C>>>> {
    let m = fd.m.ok_or(Error::NotComplexScenario)?;
    let n = fd.n;
    let r = &fd.ortho;
    let r_inv = r.clone().try_inverse().ok_or(Error::DegenerateMetric)?;
    let x = &fd.point;
    let mut cs = vec![vec![vec![C::new(0.0, 0.0); n]; n]; n];
    for (l, cl) in cs.iter_mut().enumerate() {
        for (p, row) in cl.iter_mut().enumerate() {
            for (q, v) in row.iter_mut().enumerate() {
                let e = s.structure(l, p, q);
                if !e.is_zero_structural() {
                    *v = e.eval(x)?;
                }
            }
        }
    }
    let mut out = vec![vec![vec![C::new(0.0, 0.0); m]; m]; m];
    for a in fd.n_hol() {
        for j in fd.w_hol() {
            for k in fd.w_hol() {
                let mut acc = C::new(0.0, 0.0);
                for p in 0..n {
                    for q in 0..n {
                        let rr = r[(j, p)] * r[(k, q)];
                        if rr.norm() == 0.0 {
                            continue;
                        }
                        for (l, cl) in cs.iter().enumerate() {
                            acc += rr * cl[p][q] * r_inv[(l, a)];
                        }
                    }
                }
                out[a][j][k] = acc;
            }
        }
    }
    Ok(out)
}

/// `X ⊗̂ Y` on `ΛW* ⊗̂ ΛW̄*` lifted to the full orthonormal fiber, with
/// `X`, `Y` on local masks over `w` and the Koszul sign for odd `Y`.
fn lift(n: usize, m: usize, w: &[usize], x: &DMatrix<C>, y: &DMatrix<C>, y_odd: bool) -> DMatrix<C> {
    let dim = 1usize << n;
    let loc = x.nrows();
    let mut out = DMatrix::zeros(dim, dim);
    for h in 0..loc {
        let sgn = if y_odd && grade(h as Mask) % 2 == 1 { -1.0 } else { 1.0 };
        for a in 0..loc {
            let col = globalize(h, w) | (globalize(a, w) << m);
            for h2 in 0..loc {
                let xv = x[(h2, h)];
                if xv.norm() == 0.0 {
                    continue;
                }
                for a2 in 0..loc {
                    let yv = y[(a2, a)];
                    if yv.norm() == 0.0 {
                        continue;
                    }
                    let row = globalize(h2, w) | (globalize(a2, w) << m);
                    out[(row as usize, col as usize)] += xv * yv * sgn;
                }
            }
        }
    }
    out
}

/// The first-order symbol of `[del_Q, delbar_Q*]` at `(x, xi)` in the
/// orthonormal coframe: `i` times the bracket/torsion term plus the two
/// `B` terms.
pub fn obstruction_symbol(
    s: &Scenario,
    hd: &HermitianData,
    jet: &ProjectorJet,
    fd: &FiberData,
    xi: &[f64],
) -> Result<DMatrix<C>> {
    let m = fd.m.ok_or(Error::NotComplexScenario)?;
    let n = fd.n;
    let xi_u = fd.covector(s, xi)?;
    let t = hd.torsion_at(fd)?;
    let b = bracket_coefficients(s, fd)?;
    let w = fd.w_hol();
    let dim = fd.dim();
    let mut main = DMatrix::<C>::zeros(dim, dim);
    for &j in &w {
        let iota = wedge_covector_matrix(n, &unit(n, m + j)).transpose();
        for &k in &w {
            let mut coef = C::new(0.0, 0.0);
            for &l in &w {
                coef += xi_u[l] * t[j][k][l];
            }
            for a in fd.n_hol() {
                coef -= xi_u[a] * b[a][j][k];
            }
            if coef.norm() == 0.0 {
                continue;
            }
            let eps = wedge_covector_matrix(n, &unit(n, k));
            main += &iota * eps * coef;
        }
    }
    let pq = &fd.pi_q;
    let mut total = pq * main * pq;

    // B terms; B vanishes when F_phi is a sum of whole graded pieces.
    let r = w.len();
    let loc = 1usize << r;
    let bs: Vec<DMatrix<C>> = (0..r).map(|jl| jet.b(&unit(m, w[jl]))).collect();
    if bs.iter().any(|bm| bm.camax() > 1e-12) {
        let xi_w: Vec<C> = w.iter().map(|l| xi_u[*l]).collect();
        let xi_w_conj: Vec<C> = xi_w.iter().map(|z| z.conj()).collect();
        let eps_xi = wedge_covector_matrix(r, &xi_w);
        let iota_xi = wedge_covector_matrix(r, &xi_w_conj).transpose();
        let pi_f = DMatrix::from_fn(loc, loc, |i, j| {
            fd.f_phi[(globalize(i, &w) as usize, globalize(j, &w) as usize)]
        });
        for (jl, bj) in bs.iter().enumerate() {
            let iota_j = wedge_covector_matrix(r, &unit(r, jl)).transpose();
            let x2 = bj.adjoint() * &pi_f * &eps_xi;
            total += lift(n, m, &w, &x2, &iota_j, true);
            let eps_j = wedge_covector_matrix(r, &unit(r, jl));
            let y3 = &iota_xi * bj.map(|z| z.conj());
            total -= pq * lift(n, m, &w, &eps_j, &y3, true);
        }
    }
    Ok(total * C::new(0.0, 1.0))
}

/// Real covector vanishing on `W` with `xi(u_a) = vals[a]` on the normal
/// holomorphic directions (and the conjugates on their conjugates).
pub fn normal_covector(s: &Scenario, fd: &FiberData, vals: &[(usize, C)]) -> Result<Vec<f64>> {
    let m = fd.m.ok_or(Error::NotComplexScenario)?;
    let mut on_u = DVector::<C>::zeros(fd.n);
    for (a, v) in vals {
        on_u[*a] = *v;
        on_u[*a + m] = v.conj();
    }
    let r_inv = fd.ortho.clone().try_inverse().ok_or(Error::DegenerateMetric)?;
    // e_k = sum_i (R^-1)_{ki} u_i
    let on_e = r_inv * on_u;
    s.covector_from_frame(&fd.point, on_e.as_slice())
}

/// Expected value of the symbol on `conj(u^j)` for `xi` in `N*`:
/// `i sum_k xi(pi_N [u_j, u_k]) u^k`, as a vector on the fiber.
pub fn normal_bracket_matrix(s: &Scenario, fd: &FiberData, xi: &[f64]) -> Result<Vec<(usize, DVector<C>)>> {
    let xi_u = fd.covector(s, xi)?;
    let b = bracket_coefficients(s, fd)?;
    let mut out = Vec::new();
    for j in fd.w_hol() {
        let mut v = DVector::<C>::zeros(fd.dim());
        for k in fd.w_hol() {
            let mut acc = C::new(0.0, 0.0);
            for a in fd.n_hol() {
                acc += xi_u[a] * b[a][j][k];
            }
            v[1 << k] = acc * C::new(0.0, 1.0);
        }
        out.push((j, v));
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct InvolutivityVerdict {
    pub bigrading_preserved: bool,
    /// `pi_N [w_j, w_k] = 0` decided symbolically.
    pub symbolic_involutive: Tri,
    pub consistent: bool,
    pub max_symbol: f64,
    pub covectors_checked: usize,
    /// `(x, xi, j)` with a nonzero symbol on `conj(u^j)`.
    pub witness: Option<(Vec<f64>, Vec<f64>, usize)>,
}

const ZERO_TOL: f64 = 1e-9;

/// Decides whether the obstruction symbol vanishes for all normal
/// covectors on a grid at the sample points, with a symbolic cross-check.
pub fn involutivity_verdict(s: &Scenario, hd: &HermitianData, points: usize) -> Result<InvolutivityVerdict> {
    let m = s.m().ok_or(Error::NotComplexScenario)?;
    let w = s.w_hol();
    let normal: Vec<usize> = (0..m).filter(|k| !w.contains(k)).collect();
    let mut symbolic = Tri::Yes;
    for &a in &normal {
        for &j in &w {
            for &k in &w {
                symbolic = symbolic.and(s.structure(a, j, k).is_zero());
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed ^ 0x1b0);
    let mut max_symbol: f64 = 0.0;
    let mut witness = None;
    let mut checked = 0;
    if !normal.is_empty() {
        for x in sample_points(s, points) {
            let fd = fiber_projectors(s, &x)?;
            let jet = ProjectorJet::from_fiber(s, &fd, 1e-5)?;
            let mut grid: Vec<Vec<(usize, C)>> = Vec::new();
            for &a in &normal {
                grid.push(vec![(a, C::new(1.0, 0.0))]);
                grid.push(vec![(a, C::new(0.0, 1.0))]);
            }
            for _ in 0..8 {
                let mut v: Vec<(usize, C)> = normal
                    .iter()
                    .map(|a| (*a, C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
                    .collect();
                let norm = v.iter().map(|(_, z)| z.norm_sqr()).sum::<f64>().sqrt().max(1e-12);
                v.iter_mut().for_each(|(_, z)| *z /= norm);
                grid.push(v);
            }
            for vals in grid {
                let xi = normal_covector(s, &fd, &vals)?;
                let sym = obstruction_symbol(s, hd, &jet, &fd, &xi)?;
                checked += 1;
                for &j in &w {
                    let col = sym.column(1 << (m + j));
                    let size = col.norm();
                    if size > max_symbol {
                        max_symbol = size;
                        if size > ZERO_TOL {
                            witness = Some((x.clone(), xi.clone(), j));
                        }
                    }
                }
            }
        }
    }
    let preserved = max_symbol < ZERO_TOL;
    let consistent = match symbolic {
        Tri::Yes => preserved,
        Tri::No => !preserved,
        Tri::Unknown => true,
    };
    Ok(InvolutivityVerdict {
        bigrading_preserved: preserved,
        symbolic_involutive: symbolic,
        consistent,
        max_symbol,
        covectors_checked: checked,
        witness,
    })
}
