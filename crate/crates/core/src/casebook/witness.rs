//! Non-smooth weakly harmonic forms built from first integrals of a frame
//! field of `W`.

use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::charops::{mat_apply, FrameMetric, SparseMat};
use crate::error::{Error, Result};
use crate::exterior::{grade, Form, Mask};
use crate::framedgeom::Scenario;
use crate::symexpr::{CExpr, CompiledExpr, Expr, Leaf, Rational, Tri};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessKind {
    RealDegree1,
    ComplexDegree2Standard,
    ComplexDegree2Invariant,
}

impl WitnessKind {
    pub fn name(self) -> &'static str {
        match self {
            WitnessKind::RealDegree1 => "real-degree1",
            WitnessKind::ComplexDegree2Standard => "complex-degree2-standard",
            WitnessKind::ComplexDegree2Invariant => "complex-degree2-invariant",
        }
    }

    pub fn all() -> [WitnessKind; 3] {
        [
            WitnessKind::RealDegree1,
            WitnessKind::ComplexDegree2Standard,
            WitnessKind::ComplexDegree2Invariant,
        ]
    }

    /// The kind that fits a scenario.
    pub fn for_scenario(s: &Scenario) -> WitnessKind {
        match (s.is_complex(), s.invariant) {
            (false, _) => WitnessKind::RealDegree1,
            (true, false) => WitnessKind::ComplexDegree2Standard,
            (true, true) => WitnessKind::ComplexDegree2Invariant,
        }
    }
}

impl FromStr for WitnessKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<WitnessKind> {
        WitnessKind::all()
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::KindMismatch(s.to_string()))
    }
}

/// Quadrature used by the verifier.
#[derive(Debug, Clone, Serialize)]
pub struct QuadratureConfig {
    pub bounds: Vec<(f64, f64)>,
    pub nodes: usize,
    pub periodic: bool,
    /// Per real slot, coordinates where the witness has a kink.
    pub kinks: Vec<Vec<f64>>,
}

#[derive(Clone, Serialize)]
pub struct WeakHarmonicWitness {
    pub kind: WitnessKind,
    pub recipe: String,
    pub degree: usize,
    #[serde(skip)]
    pub form: Form,
    /// A smooth form of the same shape that is not harmonic.
    #[serde(skip)]
    pub control: Form,
    /// The argument of the non-smooth profile; annihilated by the frame field.
    #[serde(skip)]
    pub profile_arg: Expr,
    /// Smooth factor multiplying the profile, when it is symbolic.
    #[serde(skip)]
    pub smooth_factor: Option<Expr>,
    pub test_family: String,
    pub quadrature: QuadratureConfig,
    /// Coefficients of the chosen field on the distribution frame.
    pub field_combination: Vec<f64>,
    /// Divergences of the distribution frame fields at the box center.
    pub field_divergences: Vec<f64>,
}

impl WeakHarmonicWitness {
    /// The same witness with the form replaced by zero.
    pub fn zeroed(&self) -> WeakHarmonicWitness {
        let mut w = self.clone();
        w.form = Form::zero(self.form.basis());
        w.recipe = "zero".into();
        w
    }
}

fn mismatch(kind: WitnessKind, why: &str) -> Error {
    Error::KindMismatch(format!("{}: {}", kind.name(), why))
}

/// Real slot whose frame component is a nonzero constant, and one whose
/// component vanishes.
fn rectifying_slots(s: &Scenario, field: usize, kind: WitnessKind) -> Result<(usize, Rational, usize)> {
    let comps = &s.real_coeffs()[field];
    let mut along = None;
    let mut across = None;
    for (i, c) in comps.iter().enumerate() {
        if c.is_zero_structural() {
            if across.is_none() {
                across = Some(i);
            }
        } else if let Some((re, im)) = c.as_constant() {
            if along.is_none() && im == Rational::from_integer(0.into()) && re != Rational::from_integer(0.into()) {
                along = Some((i, re));
            }
        }
    }
    let (k0, a) = along.ok_or_else(|| mismatch(kind, "no coordinate with constant nonzero field component"))?;
    let j = across.ok_or_else(|| mismatch(kind, "every coordinate moves along the field"))?;
    Ok((k0, a, j))
}

fn divergences_at_center(s: &Scenario, fm: &FrameMetric, fields: &[usize]) -> Result<Vec<f64>> {
    let c = s.center();
    fields.iter().map(|k| Ok(fm.div[*k].eval(&c)?.norm())).collect()
}

fn dyadic(x: f64) -> Rational {
    Rational::from_float(x).expect("finite")
}

/// Slots that the transport factor depends on: `k0`, the slots of `div X`
/// and `g`, closed under the slots of the field components along them.
fn transport_slots(comps: &[Expr], div: &Expr, g: &Expr, k0: usize) -> Vec<usize> {
    let n = comps.len();
    let mut set: Vec<usize> = (0..n).filter(|i| *i == k0 || div.depends_on(*i) || g.depends_on(*i)).collect();
    loop {
        let more: Vec<usize> = (0..n)
            .filter(|j| !set.contains(j) && set.iter().any(|i| comps[*i].depends_on(*j)))
            .collect();
        if more.is_empty() {
            return set;
        }
        set.extend(more);
        set.sort_unstable();
    }
}

/// `exp(-int_0^tau div X(Phi_{-sigma} x) d sigma) * g(x)` with
/// `tau = (x_k0 - c) / a`, by RK4 along the backward flow.
fn transport_leaf(s: &Scenario, fm: &FrameMetric, field: usize, k0: usize, a: f64, c: f64) -> Result<Expr> {
    let n = s.n();
    let comps: Vec<Expr> = s.real_coeffs()[field].iter().map(|e| e.re.clone()).collect();
    let slots = transport_slots(&comps, &fm.div[field].re, &fm.g[field], k0);
    let x_field = Arc::new(CompiledExpr::new(&comps)?);
    let div = Arc::new(CompiledExpr::new(&[fm.div[field].re.clone()])?);
    let g = Arc::new(CompiledExpr::new(&[fm.g[field].clone()])?);
    let pos_k0 = slots.iter().position(|i| *i == k0).expect("k0 is a transport slot");
    let sl = slots.clone();
    const STEPS: usize = 256;
    let eval = move |args: &[f64]| -> f64 {
        let tau = (args[pos_k0] - c) / a;
        let h = tau / STEPS as f64;
        let mut full = vec![0.0; n];
        let mut rhs = |y: &[f64]| -> (Vec<f64>, f64) {
            for (v, i) in y.iter().zip(&sl) {
                full[*i] = *v;
            }
            let v = x_field.eval(&full).unwrap_or_else(|_| vec![f64::NAN; n]);
            let d = div.eval(&full).map(|d| d[0]).unwrap_or(f64::NAN);
            (sl.iter().map(|i| -v[*i]).collect(), d)
        };
        let k = sl.len();
        let mut y = args.to_vec();
        let mut integral = 0.0;
        for _ in 0..STEPS {
            let (k1, d1) = rhs(&y);
            let y2: Vec<f64> = (0..k).map(|i| y[i] + 0.5 * h * k1[i]).collect();
            let (k2, d2) = rhs(&y2);
            let y3: Vec<f64> = (0..k).map(|i| y[i] + 0.5 * h * k2[i]).collect();
            let (k3, d3) = rhs(&y3);
            let y4: Vec<f64> = (0..k).map(|i| y[i] + h * k3[i]).collect();
            let (k4, d4) = rhs(&y4);
            for i in 0..k {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            integral += h / 6.0 * (d1 + 2.0 * d2 + 2.0 * d3 + d4);
        }
        let mut full = vec![0.0; n];
        for (v, i) in args.iter().zip(&sl) {
            full[*i] = *v;
        }
        let gx = g.eval(&full).map(|v| v[0]).unwrap_or(f64::NAN);
        (-integral).exp() * gx
    };
    let args = slots.iter().map(|i| Expr::coord(*i)).collect();
    Ok(Expr::leaf(Leaf::new("transport", args, Arc::new(eval))))
}

/// Builds the witness of the given kind on a scenario.
pub fn build_witness(s: &Scenario, kind: WitnessKind) -> Result<WeakHarmonicWitness> {
    let fm = FrameMetric::new(s)?;
    let basis = s.basis();
    let n = s.n();
    let center = s.center();
    let fields = if s.is_complex() { s.w_hol() } else { s.distribution.clone() };
    let field = *fields.first().ok_or_else(|| mismatch(kind, "empty distribution"))?;
    match (kind, s.is_complex(), s.invariant) {
        (WitnessKind::RealDegree1, false, _)
        | (WitnessKind::ComplexDegree2Standard, true, false)
        | (WitnessKind::ComplexDegree2Invariant, true, true) => {}
        _ => return Err(mismatch(kind, "scenario type")),
    }
    if s.distribution.len() == s.n() {
        return Err(mismatch(kind, "distribution is the whole tangent space, so the Laplacian is elliptic"));
    }
    let field_divergences = divergences_at_center(s, &fm, &fields)?;
    let mut field_combination = vec![0.0; fields.len()];
    field_combination[0] = 1.0;
    let (k0, a, j) = rectifying_slots(s, field, kind)?;
    let mut kinks = vec![Vec::new(); n];
    kinks[j].push(center[j]);
    let profile_arg = Expr::coord(j).sub(&Expr::constant(dyadic(center[j])));
    let (form, control, smooth_factor, degree, recipe) = if kind == WitnessKind::RealDegree1 {
        let flat = fm.div[field].is_zero() == Tri::Yes && fm.g[field].is_constant();
        let kink = Expr::leaf(Leaf::builtin("abs", vec![profile_arg.clone()]).expect("builtin"));
        let (coef, smooth) = if flat {
            (kink.mul(&fm.g[field]), Some(fm.g[field].clone()))
        } else {
            let a_f = num_traits::ToPrimitive::to_f64(&a).unwrap_or(f64::NAN);
            let t = transport_leaf(s, &fm, field, k0, a_f, center[k0])?;
            (kink.mul(&t), None)
        };
        let mask: Mask = 1 << field;
        (
            Form::monomial(basis, mask, CExpr::real(coef)),
            Form::monomial(basis, mask, CExpr::real(Expr::coord(k0))),
            smooth,
            1,
            format!("|{}| transported along the first distribution field", s.slot_names[j]),
        )
    } else {
        let m = s.m().expect("complex");
        if fm.div[field].is_zero() != Tri::Yes {
            return Err(mismatch(kind, "first distribution field has nonzero divergence"));
        }
        if !fm.g[field].is_constant() {
            return Err(mismatch(kind, "first distribution field has non-constant length"));
        }
        // Re z_c for the complex coordinate containing slot j
        if j % 2 != 0 || !s.real_coeffs()[field][j + 1].is_zero_structural() {
            return Err(mismatch(kind, "no complex coordinate annihilated by the field"));
        }
        let kink = Expr::leaf(Leaf::builtin("absRe", vec![profile_arg.clone()]).expect("builtin"));
        let mask: Mask = (1 << field) | (1 << (field + m));
        let k_re = k0 - k0 % 2;
        (
            Form::monomial(basis, mask, CExpr::real(kink)),
            Form::monomial(basis, mask, CExpr::real(Expr::coord(k_re))),
            Some(Expr::one()),
            2,
            format!("|Re {}| on conj(alpha^1) ∧ alpha^1", s.slot_names[j]),
        )
    };
    debug_assert_eq!(form.terms().map(|(m, _)| grade(*m)).max(), Some(degree));
    Ok(WeakHarmonicWitness {
        kind,
        recipe,
        degree,
        form,
        control,
        profile_arg,
        smooth_factor,
        test_family: format!(
            "pi_Q of random affine coefficients times prod exp(-1/(1-s_i^2)), degree {}",
            degree - 1
        ),
        quadrature: QuadratureConfig {
            bounds: s.bounds.clone(),
            nodes: 48,
            periodic: s.periodic,
            kinks,
        },
        field_combination,
        field_divergences,
    })
}

/// Largest pointwise `|(1 - pi_Q) w|` on a tensor grid of Gauss nodes.
pub fn q_residual(s: &Scenario, pi_q: &SparseMat, form: &Form, per_axis: usize) -> Result<f64> {
    let fm = FrameMetric::new(s)?;
    let off = mat_apply(pi_q, form).sub(form)?;
    let rules = s
        .bounds
        .iter()
        .map(|(lo, hi)| super::AxisRule::new(*lo, *hi, per_axis, &[]))
        .collect();
    let grid = super::TensorGrid::new(rules);
    let terms: Vec<(Mask, CExpr)> = off.terms().map(|(m, c)| (*m, c.clone())).collect();
    let mut worst: f64 = 0.0;
    for i in 0..grid.len() {
        let (x, _) = grid.point(i);
        let mut acc = 0.0;
        for (mask, c) in &terms {
            acc += c.eval(&x)?.norm_sqr() * fm.h(*mask).eval(&x)?;
        }
        worst = worst.max(acc.sqrt());
    }
    Ok(worst)
}

/// Riemannian volume density on the real slots, `prod sqrt(g_i) / |det E|`.
pub(crate) fn volume_density(s: &Scenario, fm: &FrameMetric, x: &[f64]) -> Result<f64> {
    let n = s.n();
    let mut e = DMatrix::<Complex64>::zeros(n, n);
    for k in 0..n {
        for i in 0..n {
            e[(k, i)] = s.real_coeffs()[k][i].eval(x)?;
        }
    }
    let mut g = 1.0;
    for gi in &fm.g {
        g *= gi.eval(x)?;
    }
    Ok(g.sqrt() / e.determinant().norm())
}
