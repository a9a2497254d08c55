//! Charts, frames, distributions and the pointwise fiber data of a framed
//! manifold.
//!
//! Vector fields are stored on a *derivation basis* `D_a`: the coordinate
//! partials `d/dx_a` on a real chart, and `d/dz_a` followed by `d/dzbar_a`
//! on a complex chart. These commute, so brackets are computed
//! componentwise.

mod audit;
mod fiber;
mod file;
mod sample;

pub use audit::{bracket_generating, constant_rank_audit, BracketReport, RankAudit};
pub use fiber::{exterior_power, fiber_projectors, phi_via_brackets, FiberData};
pub use file::{load_scenario_file, MetricSpec, ScenarioFile};
pub use sample::{sample_covectors, sample_points};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::{Basis, Coframe, Mask};
use crate::symexpr::{CExpr, ComplexCoords, Expr, Tri};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "dim")]
pub enum Chart {
    /// `n` real coordinates.
    Real(usize),
    /// `m` complex coordinates on `2m` interleaved real slots.
    Complex(usize),
}

impl Chart {
    pub fn real_dim(&self) -> usize {
        match *self {
            Chart::Real(n) => n,
            Chart::Complex(m) => 2 * m,
        }
    }

    pub fn is_complex(&self) -> bool {
        matches!(self, Chart::Complex(_))
    }

    pub fn coords(&self) -> ComplexCoords {
        match *self {
            Chart::Real(_) => ComplexCoords { pairs: vec![] },
            Chart::Complex(m) => ComplexCoords::interleaved(m),
        }
    }

    /// Applies the basis derivation `D_a` to `f`.
    pub fn apply_basis(&self, a: usize, f: &CExpr) -> Result<CExpr> {
        Ok(match *self {
            Chart::Real(_) => f.diff(a)?,
            Chart::Complex(m) => {
                let cc = self.coords();
                if a < m {
                    f.d_dz(&cc, a)?
                } else {
                    f.d_dzbar(&cc, a - m)?
                }
            }
        })
    }

    /// Coefficients of `D_a` on the real slot partials.
    pub fn basis_real_coeffs(&self, a: usize) -> Vec<Complex64> {
        let n = self.real_dim();
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        match *self {
            Chart::Real(_) => v[a] = Complex64::new(1.0, 0.0),
            Chart::Complex(m) => {
                let (k, s) = if a < m { (a, -0.5) } else { (a - m, 0.5) };
                v[2 * k] = Complex64::new(0.5, 0.0);
                v[2 * k + 1] = Complex64::new(0.0, s);
            }
        }
        v
    }
}

/// A complex vector field `sum_a V_a D_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub coeffs: Vec<CExpr>,
}

impl VectorField {
    pub fn new(coeffs: Vec<CExpr>) -> VectorField {
        VectorField { coeffs }
    }

    pub fn zero(n: usize) -> VectorField {
        VectorField::new(vec![CExpr::zero(); n])
    }

    pub fn apply(&self, chart: Chart, f: &CExpr) -> Result<CExpr> {
        let mut acc = CExpr::zero();
        for (a, v) in self.coeffs.iter().enumerate() {
            if v.is_zero_structural() {
                continue;
            }
            let d = chart.apply_basis(a, f)?;
            if !d.is_zero_structural() {
                acc = acc.add(&v.mul(&d));
            }
        }
        Ok(acc)
    }

    /// Complex conjugate field; on a complex chart this swaps the `d/dz`
    /// and `d/dzbar` blocks.
    pub fn conj(&self, chart: Chart) -> VectorField {
        match chart {
            Chart::Real(_) => VectorField::new(self.coeffs.iter().map(CExpr::conj).collect()),
            Chart::Complex(m) => {
                let mut c = vec![CExpr::zero(); 2 * m];
                for a in 0..m {
                    c[a] = self.coeffs[m + a].conj();
                    c[m + a] = self.coeffs[a].conj();
                }
                VectorField::new(c)
            }
        }
    }

    pub fn add(&self, o: &VectorField) -> VectorField {
        VectorField::new(self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a.add(b)).collect())
    }

    pub fn scale(&self, c: &CExpr) -> VectorField {
        VectorField::new(self.coeffs.iter().map(|a| a.mul(c)).collect())
    }

    pub fn canonical(&self) -> VectorField {
        VectorField::new(self.coeffs.iter().map(CExpr::canonical).collect())
    }

    pub fn eval(&self, point: &[f64]) -> Result<Vec<Complex64>> {
        self.coeffs.iter().map(|c| Ok(c.eval(point)?)).collect()
    }

    pub fn is_zero(&self) -> Tri {
        let mut acc = Tri::Yes;
        for c in &self.coeffs {
            match c.is_zero() {
                Tri::No => return Tri::No,
                Tri::Unknown => acc = Tri::Unknown,
                Tri::Yes => {}
            }
        }
        acc
    }
}

pub fn lie_bracket(chart: Chart, x: &VectorField, y: &VectorField) -> Result<VectorField> {
    let n = x.coeffs.len();
    let mut out = Vec::with_capacity(n);
    for a in 0..n {
        out.push(x.apply(chart, &y.coeffs[a])?.sub(&y.apply(chart, &x.coeffs[a])?));
    }
    Ok(VectorField::new(out))
}

/// A framed manifold with a distribution and a Hermitian frame metric.
///
/// On a complex chart the frame is `(w_1..w_m, conj w_1..conj w_m)`, so the
/// frame index of `conj w_j` is `m + j`.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub chart: Chart,
    pub coord_names: Vec<String>,
    pub slot_names: Vec<String>,
    pub frame: Vec<VectorField>,
    /// Full-frame indices spanning `W` (complexified).
    pub distribution: Vec<usize>,
    /// Full-frame Gram matrix `<e_k, e_l>`, conjugate linear in `l`.
    pub gram: Vec<Vec<CExpr>>,
    pub bounds: Vec<(f64, f64)>,
    pub periodic: bool,
    pub invariant: bool,
    pub seed: u64,
    inverse: Vec<Vec<CExpr>>,
    structure: Vec<Vec<Vec<CExpr>>>,
    real_coeffs: Vec<Vec<CExpr>>,
}

impl Scenario {
    /// Assembles a scenario and precomputes its structure functions.
    ///
    /// `rows` are the frame fields on `D_a` (on a complex chart only the
    /// `m` holomorphic-type rows, on `d/dz`).
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: &str,
        chart: Chart,
        coord_names: Vec<String>,
        rows: Vec<Vec<CExpr>>,
        distribution: Vec<usize>,
        metric: MetricSpec,
        bounds: Vec<(f64, f64)>,
        seed: u64,
    ) -> Result<Scenario> {
        let mut problems = Vec::new();
        let n = chart.real_dim();
        let slot_names: Vec<String> = match chart {
            Chart::Real(_) => coord_names.clone(),
            Chart::Complex(_) => coord_names
                .iter()
                .flat_map(|c| [format!("{c}_re"), format!("{c}_im")])
                .collect(),
        };
        let hol = match chart {
            Chart::Real(k) => k,
            Chart::Complex(m) => m,
        };
        if coord_names.len() != hol {
            problems.push(format!("expected {hol} coordinate names, got {}", coord_names.len()));
        }
        if rows.len() != hol || rows.iter().any(|r| r.len() != hol) {
            problems.push(format!("frame must be {hol} x {hol}"));
        }
        if bounds.len() != n {
            problems.push(format!("box needs {n} intervals, got {}", bounds.len()));
        }
        if bounds.iter().any(|(a, b)| !(a < b)) {
            problems.push("box intervals must satisfy lo < hi".into());
        }
        if distribution.is_empty() || distribution.iter().any(|&j| j >= hol) {
            problems.push("distribution indices out of range".into());
        }
        let mut sorted = distribution.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != distribution.len() {
            problems.push("distribution indices repeat".into());
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }

        let (frame, inverse) = match chart {
            Chart::Real(_) => {
                let fields: Vec<VectorField> = rows.iter().cloned().map(VectorField::new).collect();
                let inv = invert(&rows)?;
                (fields, inv)
            }
            Chart::Complex(m) => {
                let cc = chart.coords();
                for &j in &sorted {
                    for a in &rows[j] {
                        for k in 0..m {
                            if a.d_dzbar(&cc, k)?.is_zero() != Tri::Yes {
                                return Err(Error::NotHolomorphic(format!(
                                    "row {j}: {}",
                                    a.display(&slot_names)
                                )));
                            }
                        }
                    }
                }
                let mut fields = Vec::with_capacity(2 * m);
                for r in &rows {
                    let mut c = r.clone();
                    c.extend(std::iter::repeat(CExpr::zero()).take(m));
                    fields.push(VectorField::new(c));
                }
                for j in 0..m {
                    let f = fields[j].conj(chart);
                    fields.push(f);
                }
                let a_inv = invert(&rows)?;
                let mut inv = vec![vec![CExpr::zero(); 2 * m]; 2 * m];
                for l in 0..m {
                    for k in 0..m {
                        inv[l][k] = a_inv[l][k].clone();
                        inv[m + l][m + k] = a_inv[l][k].conj();
                    }
                }
                (fields, inv)
            }
        };

        let full_distribution: Vec<usize> = match chart {
            Chart::Real(_) => sorted.clone(),
            Chart::Complex(m) => sorted.iter().copied().chain(sorted.iter().map(|j| m + j)).collect(),
        };

        let gram = metric.full_gram(chart, &rows)?;
        for k in 0..n {
            for l in 0..n {
                if gram[k][l].sub(&gram[l][k].conj()).is_zero() == Tri::No {
                    return Err(Error::Validation(vec!["metric is not Hermitian".into()]));
                }
            }
        }

        let mut structure = vec![vec![vec![CExpr::zero(); n]; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let br = lie_bracket(chart, &frame[i], &frame[j])?;
                for k in 0..n {
                    let mut c = CExpr::zero();
                    for l in 0..n {
                        if !br.coeffs[l].is_zero_structural() && !inverse[l][k].is_zero_structural() {
                            c = c.add(&br.coeffs[l].mul(&inverse[l][k]));
                        }
                    }
                    let c = c.canonical();
                    structure[k][j][i] = c.neg();
                    structure[k][i][j] = c;
                }
            }
        }

        let mut real_coeffs = vec![vec![CExpr::zero(); n]; n];
        for (k, row) in real_coeffs.iter_mut().enumerate() {
            for (i, slot) in row.iter_mut().enumerate() {
                *slot = frame[k].apply(chart, &CExpr::real(Expr::coord(i)))?;
            }
        }

        let s = Scenario {
            name: name.to_string(),
            description: String::new(),
            chart,
            coord_names,
            slot_names,
            frame,
            distribution: full_distribution,
            gram,
            bounds,
            periodic: false,
            invariant: false,
            seed,
            inverse,
            structure,
            real_coeffs,
        };
        s.check_numerics()?;
        Ok(s)
    }

    pub fn with_description(mut self, d: &str) -> Scenario {
        self.description = d.to_string();
        self
    }

    pub fn with_invariance(mut self, periodic: bool) -> Scenario {
        self.invariant = true;
        self.periodic = periodic;
        self
    }

    fn check_numerics(&self) -> Result<()> {
        for x in sample_points(self, 8) {
            let e = self.frame_matrix(&x)?;
            if e.clone().try_inverse().is_none() || e.determinant().norm() < 1e-12 {
                return Err(Error::FrameNotInvertible(format!("at {x:?}")));
            }
            let g = self.gram_matrix(&x)?;
            if nalgebra::linalg::Cholesky::new(g).is_none() {
                return Err(Error::DegenerateMetric);
            }
        }
        Ok(())
    }

    pub fn is_complex(&self) -> bool {
        self.chart.is_complex()
    }

    /// Number of frame slots (the real dimension).
    pub fn n(&self) -> usize {
        self.chart.real_dim()
    }

    /// Number of holomorphic-type frame slots on a complex chart.
    pub fn m(&self) -> Option<usize> {
        match self.chart {
            Chart::Complex(m) => Some(m),
            Chart::Real(_) => None,
        }
    }

    pub fn basis(&self) -> Basis {
        match self.chart {
            Chart::Real(n) => Basis::real(Coframe::Frame, n),
            Chart::Complex(m) => Basis::complex(Coframe::Frame, m),
        }
    }

    pub fn w_mask(&self) -> Mask {
        self.distribution.iter().fold(0, |acc, &i| acc | (1 << i))
    }

    /// Holomorphic-type indices of `W` (complex) or all of `W` (real).
    pub fn w_hol(&self) -> Vec<usize> {
        match self.chart {
            Chart::Real(_) => self.distribution.clone(),
            Chart::Complex(m) => self.distribution.iter().copied().filter(|&j| j < m).collect(),
        }
    }

    /// Structure function `c^k_{ij}` with `[e_i, e_j] = sum_k c^k_{ij} e_k`.
    pub fn structure(&self, k: usize, i: usize, j: usize) -> &CExpr {
        &self.structure[k][i][j]
    }

    /// `D_l = sum_k inverse[l][k] e_k`.
    pub fn inverse_frame(&self) -> &[Vec<CExpr>] {
        &self.inverse
    }

    /// `e_k(x_i)`: coefficients of the frame on the real slot partials.
    pub fn real_coeffs(&self) -> &[Vec<CExpr>] {
        &self.real_coeffs
    }

    /// Applies the frame field `e_k` to `f`.
    pub fn apply(&self, k: usize, f: &CExpr) -> Result<CExpr> {
        self.frame[k].apply(self.chart, f)
    }

    /// Diagonal of the frame Gram, or an error if it is not diagonal.
    pub fn diag_gram(&self) -> Result<Vec<Expr>> {
        let n = self.n();
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            for l in 0..n {
                if k != l && self.gram[k][l].is_zero() != Tri::Yes {
                    return Err(Error::NonDiagonalMetric);
                }
            }
            let g = &self.gram[k][k];
            if g.im.is_zero() != Tri::Yes {
                return Err(Error::DegenerateMetric);
            }
            out.push(Expr::factored(&g.re.canonical()));
        }
        Ok(out)
    }

    pub fn is_frame_orthonormal(&self) -> bool {
        let n = self.n();
        (0..n).all(|k| {
            (0..n).all(|l| {
                let want = if k == l { CExpr::one() } else { CExpr::zero() };
                self.gram[k][l].sub(&want).is_zero() == Tri::Yes
            })
        })
    }

    pub fn frame_matrix(&self, x: &[f64]) -> Result<nalgebra::DMatrix<Complex64>> {
        let n = self.n();
        let mut e = nalgebra::DMatrix::zeros(n, n);
        for k in 0..n {
            for a in 0..n {
                e[(k, a)] = self.frame[k].coeffs[a].eval(x)?;
            }
        }
        Ok(e)
    }

    pub fn gram_matrix(&self, x: &[f64]) -> Result<nalgebra::DMatrix<Complex64>> {
        let n = self.n();
        let mut g = nalgebra::DMatrix::zeros(n, n);
        for k in 0..n {
            for l in 0..n {
                g[(k, l)] = self.gram[k][l].eval(x)?;
            }
        }
        Ok(g)
    }

    pub fn center(&self) -> Vec<f64> {
        self.bounds.iter().map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// Covector `xi` on the real slots evaluated on the frame: `xi(e_k)`.
    pub fn covector_on_frame(&self, x: &[f64], xi: &[f64]) -> Result<Vec<Complex64>> {
        let n = self.n();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (k, o) in out.iter_mut().enumerate() {
            for i in 0..n {
                if xi[i] != 0.0 {
                    *o += self.real_coeffs[k][i].eval(x)? * xi[i];
                }
            }
        }
        Ok(out)
    }

    /// Real-slot components of the real covector with the given values
    /// on the frame (which must be conjugation symmetric).
    pub fn covector_from_frame(&self, x: &[f64], vals: &[Complex64]) -> Result<Vec<f64>> {
        let n = self.n();
        // xi_i = sum_k vals_k * e^k(d/dx_i), with e^k(d/dx_i) from E^{-1}
        let mut e = nalgebra::DMatrix::<Complex64>::zeros(n, n);
        for k in 0..n {
            for i in 0..n {
                e[(k, i)] = self.real_coeffs[k][i].eval(x)?;
            }
        }
        let inv = e
            .try_inverse()
            .ok_or_else(|| Error::FrameNotInvertible(format!("at {x:?}")))?;
        let v = nalgebra::DVector::from_column_slice(vals);
        let xi = inv * v;
        Ok(xi.iter().map(|z| z.re).collect())
    }
}

/// Symbolic inverse by cofactors, `out[l][k]` with `sum_k M[i][k] out[k][j] = delta`.
fn invert(m: &[Vec<CExpr>]) -> Result<Vec<Vec<CExpr>>> {
    let n = m.len();
    let all: Vec<usize> = (0..n).collect();
    let det = det_minor(m, &all, &all).canonical();
    if det.is_zero() == Tri::Yes {
        return Err(Error::FrameNotInvertible("determinant vanishes identically".into()));
    }
    let inv_det = match det.as_constant() {
        Some(_) => det.recip()?,
        None if det.is_real_structural() => CExpr::real(Expr::factored(&det.re).recip()?),
        None => det.recip()?,
    };
    let mut out = vec![vec![CExpr::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            let rows: Vec<usize> = all.iter().copied().filter(|&r| r != i).collect();
            let cols: Vec<usize> = all.iter().copied().filter(|&c| c != j).collect();
            let mut c = det_minor(m, &rows, &cols);
            if (i + j) % 2 == 1 {
                c = c.neg();
            }
            // adjugate is the transposed cofactor matrix
            out[j][i] = c.mul(&inv_det).canonical();
        }
    }
    Ok(out)
}

fn det_minor(m: &[Vec<CExpr>], rows: &[usize], cols: &[usize]) -> CExpr {
    match rows.len() {
        0 => CExpr::one(),
        1 => m[rows[0]][cols[0]].clone(),
        _ => {
            let r = rows[0];
            let rest = &rows[1..];
            let mut acc = CExpr::zero();
            for (idx, &c) in cols.iter().enumerate() {
                let a = &m[r][c];
                if a.is_zero_structural() {
                    continue;
                }
                let sub: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
                let t = a.mul(&det_minor(m, rest, &sub));
                acc = if idx % 2 == 0 { acc.add(&t) } else { acc.sub(&t) };
            }
            acc
        }
    }
}

#[cfg(test)]
mod tests;
