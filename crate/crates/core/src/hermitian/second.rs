//! Second fundamental forms from differentiated projector fields.
//!
//! `A(v̄) = pi_W (dbar_v̄ Pi_N) Pi_N` on `T^(1,0)` in the holomorphic
//! coordinate frame, and `B(v̄) = pi_F (dbar_v̄ Pi_Fperp) Pi_Fperp` on the
//! holomorphic part of `ΛW*` in the holomorphic frame dual to the
//! distribution's frame fields. Derivatives are central differences.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exterior::Mask;
use crate::framedgeom::{exterior_power, fiber_projectors, FiberData, Scenario};

type C = Complex64;

/// Projector fields and their antiholomorphic derivatives at a point.
#[derive(Debug, Clone)]
pub struct ProjectorJet {
    pub point: Vec<f64>,
    pub m: usize,
    /// Holomorphic frame indices spanning `W`, and the rest.
    pub w: Vec<usize>,
    pub normal: Vec<usize>,
    /// Columns are the coordinate vectors of the orthonormal `u_k`.
    pub u: DMatrix<C>,
    pub pi_n: DMatrix<C>,
    /// `d/dzbar_a Pi_N` for each complex coordinate.
    pub dbar_pi_n: Vec<DMatrix<C>>,
    /// Holomorphic basis of `ΛW*` to orthonormal basis, on local masks.
    pub hol_to_u: DMatrix<C>,
    pub pi_fperp: DMatrix<C>,
    pub dbar_pi_fperp: Vec<DMatrix<C>>,
}

struct Local {
    u: DMatrix<C>,
    pi_n: DMatrix<C>,
    to_u: DMatrix<C>,
    pi_fperp: DMatrix<C>,
    ranks: Vec<usize>,
}

/// Maps a local mask over `w` to the global holomorphic mask.
pub(crate) fn globalize(local: usize, w: &[usize]) -> Mask {
    w.iter()
        .enumerate()
        .filter(|(b, _)| local & (1 << b) != 0)
        .fold(0, |acc, (_, g)| acc | (1 << g))
}

fn local_data(fd: &FiberData, w: &[usize]) -> Result<Local> {
    let m = fd.m.ok_or(Error::NotComplexScenario)?;
    let r_h = fd.ortho.view((0, 0), (m, m)).into_owned();
    let e_h = fd.frame.view((0, 0), (m, m)).into_owned();
    let u = (&r_h * &e_h).transpose();
    let u_inv = u.clone().try_inverse().ok_or(Error::DegenerateMetric)?;
    let mut p_n = DMatrix::<C>::zeros(m, m);
    for k in (0..m).filter(|k| !w.contains(k)) {
        p_n[(k, k)] = C::new(1.0, 0.0);
    }
    let pi_n = &u * p_n * &u_inv;
    let r = w.len();
    let r_w = DMatrix::from_fn(r, r, |i, j| r_h[(w[i], w[j])]);
    let to_u = exterior_power(r, &r_w.transpose());
    let to_u_inv = to_u.clone().try_inverse().ok_or(Error::DegenerateMetric)?;
    let dim = 1usize << r;
    let f_u = DMatrix::from_fn(dim, dim, |i, j| {
        fd.f_phi[(globalize(i, w) as usize, globalize(j, w) as usize)]
    });
    let perp_u = DMatrix::<C>::identity(dim, dim) - f_u;
    let pi_fperp = to_u_inv * perp_u * &to_u;
    Ok(Local {
        u,
        pi_n,
        to_u,
        pi_fperp,
        ranks: fd.f_phi_ranks.clone(),
    })
}

impl ProjectorJet {
    /// Central differences with step `h` in each real slot.
    pub fn new(s: &Scenario, x: &[f64], h: f64) -> Result<ProjectorJet> {
        let fd = fiber_projectors(s, x)?;
        Self::from_fiber(s, &fd, h)
    }

    pub fn from_fiber(s: &Scenario, fd: &FiberData, h: f64) -> Result<ProjectorJet> {
        let m = s.m().ok_or(Error::NotComplexScenario)?;
        let x = fd.point.clone();
        let w = s.w_hol();
        let normal: Vec<usize> = (0..m).filter(|k| !w.contains(k)).collect();
        let base = local_data(fd, &w)?;
        let mut d_n = Vec::with_capacity(m);
        let mut d_f = Vec::with_capacity(m);
        for a in 0..m {
            let mut parts = Vec::with_capacity(2);
            for slot in [2 * a, 2 * a + 1] {
                let mut side = Vec::with_capacity(2);
                for sgn in [1.0, -1.0] {
                    let mut y = x.clone();
                    y[slot] += sgn * h;
                    let l = local_data(&fiber_projectors(s, &y)?, &w)?;
                    if l.ranks != base.ranks {
                        return Err(Error::RankDrop {
                            what: format!("F_phi near the stencil (ranks {:?})", l.ranks),
                            point: y,
                        });
                    }
                    side.push(l);
                }
                let dn = (&side[0].pi_n - &side[1].pi_n) / C::new(2.0 * h, 0.0);
                let df = (&side[0].pi_fperp - &side[1].pi_fperp) / C::new(2.0 * h, 0.0);
                parts.push((dn, df));
            }
            // d/dzbar = (d/dx + i d/dy) / 2
            let half = C::new(0.5, 0.0);
            let ih = C::new(0.0, 0.5);
            d_n.push(&parts[0].0 * half + &parts[1].0 * ih);
            d_f.push(&parts[0].1 * half + &parts[1].1 * ih);
        }
        Ok(ProjectorJet {
            point: x,
            m,
            w,
            normal,
            u: base.u,
            pi_n: base.pi_n,
            dbar_pi_n: d_n,
            hol_to_u: base.to_u,
            pi_fperp: base.pi_fperp,
            dbar_pi_fperp: d_f,
        })
    }

    /// `sum_a conj(c_a) M_a` where `c` is the coordinate vector of `v`.
    fn along(&self, v: &[C], ms: &[DMatrix<C>]) -> DMatrix<C> {
        let vv = nalgebra::DVector::from_column_slice(v);
        let c = &self.u * vv;
        let mut out = DMatrix::zeros(ms[0].nrows(), ms[0].ncols());
        for (a, ma) in ms.iter().enumerate() {
            out += ma * c[a].conj();
        }
        out
    }

    /// `A(v̄)` on `T^(1,0)` in the orthonormal frame, for
    /// `v = sum_k v_k u_k`.
    pub fn a(&self, v: &[C]) -> DMatrix<C> {
        let m = self.m;
        let id = DMatrix::<C>::identity(m, m);
        let d = self.along(v, &self.dbar_pi_n);
        let a_coord = (&id - &self.pi_n) * d * &self.pi_n;
        let u_inv = self.u.clone().try_inverse().expect("frame invertible");
        u_inv * a_coord * &self.u
    }

    /// `B(v̄)` on the holomorphic part of `ΛW*`, orthonormal local basis.
    pub fn b(&self, v: &[C]) -> DMatrix<C> {
        let dim = self.pi_fperp.nrows();
        let id = DMatrix::<C>::identity(dim, dim);
        let d = self.along(v, &self.dbar_pi_fperp);
        let b_hol = (&id - &self.pi_fperp) * d * &self.pi_fperp;
        let inv = self.hol_to_u.clone().try_inverse().expect("invertible");
        &self.hol_to_u * b_hol * inv
    }

    /// Metric on `T^(1,0)` in coordinates: `<a, b> = b^† M a`.
    pub fn coordinate_metric(&self) -> DMatrix<C> {
        let u_inv = self.u.clone().try_inverse().expect("frame invertible");
        u_inv.adjoint() * u_inv
    }

    /// `A(v̄)` in the coordinate frame.
    pub fn a_coordinate(&self, v: &[C]) -> DMatrix<C> {
        let u_inv = self.u.clone().try_inverse().expect("frame invertible");
        &self.u * self.a(v) * u_inv
    }
}

/// Second fundamental forms at a point along `v̄`, orthonormal frames.
#[derive(Debug, Clone)]
pub struct SecondFundamentalForms {
    pub a: DMatrix<C>,
    pub a_star: DMatrix<C>,
    pub b: DMatrix<C>,
    pub b_star: DMatrix<C>,
}

/// `A(v̄)`, `B(v̄)` and adjoints with step `1e-5`, for `v = sum v_k u_k`.
pub fn second_fundamental(s: &Scenario, x: &[f64], v: &[C]) -> Result<SecondFundamentalForms> {
    let jet = ProjectorJet::new(s, x, 1e-5)?;
    let a = jet.a(v);
    let b = jet.b(v);
    Ok(SecondFundamentalForms {
        a_star: a.adjoint(),
        a,
        b_star: b.adjoint(),
        b,
    })
}
