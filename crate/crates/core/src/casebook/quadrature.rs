//! Gauss-Legendre rules and tensor grids on boxes.

use nalgebra::{DMatrix, SymmetricEigen};

/// Nodes and weights on `[-1, 1]` by the Golub-Welsch eigenvalue method.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "rule needs at least one node");
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let kf = k as f64;
        let b = kf / (4.0 * kf * kf - 1.0).sqrt();
        jac[(k - 1, k)] = b;
        jac[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], 2.0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// A one-dimensional composite rule: Gauss-Legendre on each piece of
/// `[lo, hi]` split at `breaks`.
#[derive(Debug, Clone)]
pub struct AxisRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl AxisRule {
    pub fn new(lo: f64, hi: f64, n: usize, breaks: &[f64]) -> AxisRule {
        let mut cuts = vec![lo];
        let mut inner: Vec<f64> = breaks.iter().copied().filter(|b| *b > lo && *b < hi).collect();
        inner.sort_by(f64::total_cmp);
        cuts.extend(inner);
        cuts.push(hi);
        let pieces = cuts.len() - 1;
        let per = n.div_ceil(pieces).max(1);
        let (t, w) = gauss_legendre(per);
        let mut nodes = Vec::with_capacity(per * pieces);
        let mut weights = Vec::with_capacity(per * pieces);
        for p in cuts.windows(2) {
            let (a, b) = (p[0], p[1]);
            let half = 0.5 * (b - a);
            for (ti, wi) in t.iter().zip(&w) {
                nodes.push(a + half * (ti + 1.0));
                weights.push(half * wi);
            }
        }
        AxisRule { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Tensor product of axis rules, indexed in row-major order.
#[derive(Debug, Clone)]
pub struct TensorGrid {
    pub axes: Vec<AxisRule>,
}

impl TensorGrid {
    pub fn new(axes: Vec<AxisRule>) -> TensorGrid {
        TensorGrid { axes }
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(AxisRule::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Point and weight of flat index `idx`.
    pub fn point(&self, mut idx: usize) -> (Vec<f64>, f64) {
        let mut x = vec![0.0; self.axes.len()];
        let mut w = 1.0;
        for (d, ax) in self.axes.iter().enumerate().rev() {
            let i = idx % ax.len();
            idx /= ax.len();
            x[d] = ax.nodes[i];
            w *= ax.weights[i];
        }
        (x, w)
    }
}
