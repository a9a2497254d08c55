//! Dense matrices of exterior algebra operators on a single fiber.
//!
//! Vectors are indexed by monomial mask, so `dim = 2^slots`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{conj_mask, wedge_pair_sign, wedge_sign, Mask};
use crate::error::{Error, Result};

type C = Complex64;

fn zero(n: usize) -> DMatrix<C> {
    DMatrix::zeros(1 << n, 1 << n)
}

/// `e^k ∧` on the full exterior algebra of `n` slots.
pub fn wedge_matrix(n: usize, k: usize) -> DMatrix<C> {
    let mut m = zero(n);
    for i in 0..(1usize << n) {
        if i & (1 << k) == 0 {
            m[(i | (1 << k), i)] = C::new(wedge_sign(k, i as Mask), 0.0);
        }
    }
    m
}

/// Contraction with the basis vector dual to slot `k`.
pub fn interior_matrix(n: usize, k: usize) -> DMatrix<C> {
    wedge_matrix(n, k).transpose()
}

/// `xi ∧` for `xi = sum_k c_k e^k`.
pub fn wedge_covector_matrix(n: usize, c: &[C]) -> DMatrix<C> {
    let mut m = zero(n);
    for (k, ck) in c.iter().enumerate() {
        if *ck != C::new(0.0, 0.0) {
            m += wedge_matrix(n, k) * *ck;
        }
    }
    m
}

/// Contraction with `v = sum_k v_k e_k`.
pub fn interior_vector_matrix(n: usize, v: &[C]) -> DMatrix<C> {
    let mut m = zero(n);
    for (k, vk) in v.iter().enumerate() {
        if *vk != C::new(0.0, 0.0) {
            m += interior_matrix(n, k) * *vk;
        }
    }
    m
}

/// Projector onto forms whose monomials satisfy `keep`.
pub fn grade_projector(n: usize, keep: impl Fn(Mask) -> bool) -> DMatrix<C> {
    let mut m = zero(n);
    for i in 0..(1usize << n) {
        if keep(i as Mask) {
            m[(i, i)] = C::new(1.0, 0.0);
        }
    }
    m
}

/// Real-linear part of complex conjugation on a bigraded basis with `m`
/// holomorphic slots: `conj(a) = K * a.map(conj)`.
pub fn conj_matrix(m: usize) -> DMatrix<C> {
    let n = 2 * m;
    let mut k = zero(n);
    for i in 0..(1usize << n) {
        let (j, s) = conj_mask(i as Mask, m);
        k[(j as usize, i)] = C::new(s, 0.0);
    }
    k
}

/// A real inner product on a single cotangent fiber together with the
/// orientation of its slot order.
#[derive(Debug, Clone)]
pub struct MetricFiber {
    /// Gram matrix `<e^i, e^j>` of the coframe.
    pub gram: DMatrix<f64>,
    /// `+1` if the slot order is positively oriented.
    pub orientation: f64,
    chol: DMatrix<f64>,
}

impl MetricFiber {
    pub fn new(gram: DMatrix<f64>, orientation: f64) -> Result<MetricFiber> {
        if gram.nrows() != gram.ncols() || gram.nrows() > 8 {
            return Err(Error::DegenerateMetric);
        }
        if (&gram - gram.transpose()).amax() > 1e-12 * gram.amax().max(1.0) {
            return Err(Error::DegenerateMetric);
        }
        let chol = nalgebra::linalg::Cholesky::new(gram.clone())
            .ok_or(Error::DegenerateMetric)?
            .l();
        Ok(MetricFiber {
            gram,
            orientation: if orientation < 0.0 { -1.0 } else { 1.0 },
            chol,
        })
    }

    pub fn identity(n: usize) -> MetricFiber {
        MetricFiber::new(DMatrix::identity(n, n), 1.0).expect("identity metric")
    }

    pub fn slots(&self) -> usize {
        self.gram.nrows()
    }

    /// Matrix taking coefficients on `e^I` to coefficients on the
    /// orthonormal coframe `u = L^{-1} e` where `gram = L L^T`.
    fn to_orthonormal(&self) -> DMatrix<f64> {
        let n = self.slots();
        let dim = 1usize << n;
        let mut out = DMatrix::zeros(dim, dim);
        // e^i = sum_a L_{ia} u^a
        for col in 0..dim {
            let mut acc = vec![0.0; dim];
            acc[0] = 1.0;
            for i in 0..n {
                if col & (1 << i) == 0 {
                    continue;
                }
                let mut next = vec![0.0; dim];
                for (mask, v) in acc.iter().enumerate() {
                    if *v == 0.0 {
                        continue;
                    }
                    for a in 0..n {
                        let l = self.chol[(i, a)];
                        if l == 0.0 || mask & (1 << a) != 0 {
                            continue;
                        }
                        // acc ∧ u^a = sign * u^{mask | a}
                        let s = wedge_pair_sign(mask as Mask, 1 << a);
                        next[mask | (1 << a)] += s * v * l;
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

    /// Induced Gram matrix on the whole exterior algebra.
    pub fn induced_gram(&self) -> DMatrix<f64> {
        let t = self.to_orthonormal();
        t.transpose() * t
    }

    pub fn inner(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        (a.transpose() * self.induced_gram() * b)[(0, 0)]
    }

    /// The Riemannian volume form on the coframe basis.
    pub fn volume(&self) -> DVector<f64> {
        let n = self.slots();
        let mut v = DVector::zeros(1 << n);
        let det: f64 = (0..n).map(|i| self.chol[(i, i)]).product();
        // u^{1..n} = det(L^{-1}) e^{1..n}
        v[(1 << n) - 1] = self.orientation / det;
        v
    }

    /// Hodge star, defined by `a ∧ *b = <a, b> vol`.
    pub fn hodge_star(&self, a: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.slots();
        let dim = 1usize << n;
        if a.len() != dim {
            return Err(Error::CoframeMismatch);
        }
        let t = self.to_orthonormal();
        let t_inv = t.clone().try_inverse().ok_or(Error::DegenerateMetric)?;
        let u = &t * a;
        let full = (dim - 1) as Mask;
        let mut star = DVector::zeros(dim);
        for i in 0..dim {
            if u[i] == 0.0 {
                continue;
            }
            let comp = full & !(i as Mask);
            star[comp as usize] += self.orientation * wedge_pair_sign(i as Mask, comp) * u[i];
        }
        Ok(t_inv * star)
    }
}

/// Real exterior product of dense vectors.
pub fn wedge_dense(n: usize, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    let dim = 1usize << n;
    let mut out = DVector::zeros(dim);
    for i in 0..dim {
        if a[i] == 0.0 {
            continue;
        }
        for j in 0..dim {
            if b[j] == 0.0 || i & j != 0 {
                continue;
            }
            out[i | j] += wedge_pair_sign(i as Mask, j as Mask) * a[i] * b[j];
        }
    }
    out
}
