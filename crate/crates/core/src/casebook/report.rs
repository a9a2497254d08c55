//! Check runners shared by the report, the command line and the
//! acceptance tests, and the report document itself.

use std::fmt::Write as _;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use super::{build_witness, l2_adjointness, verify_with_ops, WitnessKind};
use crate::charops::{build_characteristic_ops, mat_apply, closed_form_symbols, hoermander_applicability, symbol_oracle, CharacteristicOps};
use crate::error::{Error, Result};
use crate::exterior::{grade, wedge_covector_matrix, Form, Mask};
use crate::framedgeom::{bracket_generating, constant_rank_audit, fiber_projectors, sample_covectors, sample_points, FiberData, Scenario};
use crate::hermitian::{hermitian_data, involutivity_verdict, kaehler_check, obstruction_symbol, sub_kaehler_residual, ProjectorJet};
use crate::symexpr::{CExpr, Expr, Rational, Tri};

type C = Complex64;

pub const SCHEMA: &str = "charlap-report/1";
pub const SYMBOL_TOL: f64 = 1e-8;
pub const IDENTITY_TOL: f64 = 1e-6;
pub const OBSTRUCTION_ORDER1_TOL: f64 = 1e-6;
pub const OBSTRUCTION_ORDER2_TOL: f64 = 1e-9;
pub const ADJOINT_TOL: f64 = 1e-6;
pub const STRUCTURE_TOL: f64 = 1e-9;
pub const SANDWICH_TOL: f64 = 1e-10;
pub const BRACKET_DEPTH: usize = 4;

fn rel_err(a: &DMatrix<C>, b: &DMatrix<C>) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
}

/// `count` point/covector pairs: `ceil(count / 4)` points with four
/// covectors each.
pub fn sample_pairs(s: &Scenario, count: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let pts = sample_points(s, count.div_ceil(4));
    let xis = sample_covectors(s.n(), 4 * pts.len(), s.seed ^ 0x51);
    pts.iter()
        .enumerate()
        .flat_map(|(i, x)| (0..4).map(move |j| (i, j, x.clone())))
        .map(|(i, j, x)| (x, xis[4 * i + j].clone()))
        .take(count)
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SymbolResiduals {
    pub pairs: usize,
    /// Relative errors of the oracle against the closed forms.
    pub d_q: f64,
    pub d_q_star: f64,
    pub laplacian: f64,
}

impl SymbolResiduals {
    pub fn max(&self) -> f64 {
        self.d_q.max(self.d_q_star).max(self.laplacian)
    }
}

/// Oracle symbols of `d_Q`, `d_Q*` and `Delta_Q` against the closed forms.
pub fn symbol_residuals(s: &Scenario, ops: &CharacteristicOps, count: usize) -> Result<SymbolResiduals> {
    let d_q = symbol_oracle(s, &ops.op("d_Q")?, 1)?;
    let d_q_star = symbol_oracle(s, &ops.op("d_Q*")?, 1)?;
    let lap = symbol_oracle(s, &ops.laplacian, 2)?;
    let mut out = SymbolResiduals { pairs: 0, d_q: 0.0, d_q_star: 0.0, laplacian: 0.0 };
    let mut last: Option<(Vec<f64>, FiberData)> = None;
    for (x, xi) in sample_pairs(s, count) {
        if last.as_ref().map(|(p, _)| p != &x).unwrap_or(true) {
            last = Some((x.clone(), fiber_projectors(s, &x)?));
        }
        let fd = &last.as_ref().expect("fiber").1;
        let cf = closed_form_symbols(s, fd, &xi)?;
        out.d_q = out.d_q.max(rel_err(&d_q.eval(&x, &xi)?, &fd.to_frame_basis(&cf.d_q)));
        out.d_q_star = out.d_q_star.max(rel_err(&d_q_star.eval(&x, &xi)?, &fd.to_frame_basis(&cf.d_q_star)));
        out.laplacian = out.laplacian.max(rel_err(&lap.eval(&x, &xi)?, &fd.to_frame_basis(&cf.laplacian)));
        out.pairs += 1;
    }
    Ok(out)
}

/// Oracle and closed-form symbol of one operator at one `(x, xi)`, on
/// the frame coframe `e^I`.
#[derive(Debug, Clone, Serialize)]
pub struct SymbolComparison {
    pub operator: String,
    pub order: usize,
    /// Rows of `[re, im]` pairs.
    pub oracle: Vec<Vec<[f64; 2]>>,
    pub closed_form: Vec<Vec<[f64; 2]>>,
    /// Relative for `d_Q`, `d_Q*`, `Delta_Q`; absolute for the obstruction.
    pub residual: f64,
    pub tolerance: f64,
}

impl SymbolComparison {
    pub fn passed(&self) -> bool {
        self.residual < self.tolerance
    }
}

fn rows(m: &DMatrix<C>) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

/// Operators accepted by [`compare_symbol`].
pub const SYMBOL_OPERATORS: [&str; 4] = ["d_Q", "d_Q*", "laplacian_Q", "obstruction"];

pub fn compare_symbol(s: &Scenario, ops: &CharacteristicOps, name: &str, x: &[f64], xi: &[f64]) -> Result<SymbolComparison> {
    if x.len() != s.n() || xi.len() != s.n() {
        return Err(Error::Validation(vec![format!("point and covector need {} entries", s.n())]));
    }
    let fd = fiber_projectors(s, x)?;
    let (op, order) = match name {
        "d_Q" | "d_Q*" => (ops.op(name)?, 1),
        "laplacian_Q" => (ops.laplacian.clone(), 2),
        "obstruction" => (ops.obstruction_operator()?, 1),
        other => return Err(Error::Validation(vec![format!("no closed-form symbol for `{other}`")])),
    };
    let oracle = symbol_oracle(s, &op, order)?.eval(x, xi)?;
    let (closed, residual, tolerance) = if name == "obstruction" {
        let hd = hermitian_data(s)?;
        let jet = ProjectorJet::from_fiber(s, &fd, 1e-5)?;
        let c = fd.to_frame_basis(&obstruction_symbol(s, &hd, &jet, &fd, xi)?);
        let r = (&oracle - &c).norm();
        (c, r, OBSTRUCTION_ORDER1_TOL)
    } else {
        let cf = closed_form_symbols(s, &fd, xi)?;
        let m = match name {
            "d_Q" => cf.d_q,
            "d_Q*" => cf.d_q_star,
            _ => cf.laplacian,
        };
        let c = fd.to_frame_basis(&m);
        let r = rel_err(&oracle, &c);
        (c, r, SYMBOL_TOL)
    };
    Ok(SymbolComparison {
        operator: name.to_string(),
        order,
        oracle: rows(&oracle),
        closed_form: rows(&closed),
        residual,
        tolerance,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ObstructionResiduals {
    pub pairs: usize,
    /// `max |oracle_1 - closed form|`.
    pub order1: f64,
    /// `max |oracle_2|`.
    pub order2: f64,
    /// Largest closed-form symbol seen.
    pub max_symbol: f64,
}

/// Closed-form first-order symbol of `[del_Q, delbar_Q*]` against the
/// oracle, and the size of its second-order oracle coefficient.
pub fn obstruction_residuals(s: &Scenario, ops: &CharacteristicOps, count: usize) -> Result<ObstructionResiduals> {
    let hd = hermitian_data(s)?;
    let op = ops.obstruction_operator()?;
    let o1 = symbol_oracle(s, &op, 1)?;
    let o2 = symbol_oracle(s, &op, 2)?;
    let mut out = ObstructionResiduals { pairs: 0, order1: 0.0, order2: 0.0, max_symbol: 0.0 };
    let mut last: Option<(Vec<f64>, FiberData, ProjectorJet)> = None;
    for (x, xi) in sample_pairs(s, count) {
        if last.as_ref().map(|(p, _, _)| p != &x).unwrap_or(true) {
            let fd = fiber_projectors(s, &x)?;
            let jet = ProjectorJet::from_fiber(s, &fd, 1e-5)?;
            last = Some((x.clone(), fd, jet));
        }
        let (_, fd, jet) = last.as_ref().expect("fiber");
        let mine = fd.to_frame_basis(&obstruction_symbol(s, &hd, jet, fd, &xi)?);
        out.order1 = out.order1.max((&o1.eval(&x, &xi)? - &mine).norm());
        out.order2 = out.order2.max(o2.eval(&x, &xi)?.norm());
        out.max_symbol = out.max_symbol.max(mine.norm());
        out.pairs += 1;
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct StructureResiduals {
    /// `d d u = 0` symbolically on a random form of each degree.
    pub d_squared_zero: Tri,
    /// `max |d_Q d_Q u|` at sample points.
    pub d_q_squared: f64,
    /// `max |pi_Q d pi_Q u - pi_Q d u|`.
    pub projected_d: f64,
    /// `max |pi_Q d* pi_Q u - d* pi_Q u|`.
    pub projected_d_star: f64,
    /// Complex charts: `max |pi_Q i_{xi*} pi_Q^perp xi∧ pi_Q|` over
    /// `xi = del_W f`, where `i_{xi*}` is the adjoint of `delbar_W f ∧`.
    pub sandwich: Option<f64>,
    /// The same product with `d_W f` in both slots, which need not vanish.
    pub sandwich_mixed: Option<f64>,
    pub points: usize,
}

impl StructureResiduals {
    pub fn passed(&self) -> bool {
        self.d_squared_zero == Tri::Yes
            && self.d_q_squared < STRUCTURE_TOL
            && self.projected_d < STRUCTURE_TOL
            && self.projected_d_star < STRUCTURE_TOL
            && self.sandwich.is_none_or(|v| v < SANDWICH_TOL)
    }
}

fn random_poly_form(s: &Scenario, k: usize, rng: &mut ChaCha8Rng) -> Form {
    let basis = s.basis();
    let mut f = Form::zero(basis);
    for mask in (0..basis.dim() as Mask).filter(|m| grade(*m) == k) {
        let mut re = Expr::int(rng.gen_range(-3..=3));
        for i in 0..s.n() {
            let c = Rational::new(rng.gen_range(-4..=4).into(), 4.into());
            re = re.add(&Expr::coord(i).mul(&Expr::coord((i + 1) % s.n())).scale(&c));
        }
        f.add_term(mask, CExpr::real(re));
    }
    f
}

/// Pointwise norm of a form in the metric of the frame.
fn pointwise_norm(ops: &CharacteristicOps, f: &Form, x: &[f64]) -> Result<f64> {
    let mut acc = 0.0;
    for (mask, c) in f.terms() {
        acc += c.eval(x)?.norm_sqr() * ops.metric.h(*mask).eval(x)?;
    }
    Ok(acc.sqrt())
}

/// `|pi_Q (b∧)^* pi_Q^perp a∧ pi_Q|`.
fn sandwich_norm(fd: &FiberData, a: &[C], b: &[C]) -> f64 {
    let ea = wedge_covector_matrix(fd.n, a);
    let eb = wedge_covector_matrix(fd.n, b);
    let id = DMatrix::<C>::identity(fd.dim(), fd.dim());
    let pq = &fd.pi_q;
    (pq * eb.adjoint() * (id - pq) * ea * pq).norm()
}

/// `d^2 = 0` symbolically; `d_Q^2 = 0`, `pi_Q d pi_Q = pi_Q d` and
/// `pi_Q d* pi_Q = d* pi_Q` at sample points; on complex charts the
/// vanishing of `pi_Q i_{xi*} pi_Q^perp xi∧ pi_Q` for `xi` in `W^(1,0)*`.
pub fn structure_residuals(s: &Scenario, ops: &CharacteristicOps, points: usize) -> Result<StructureResiduals> {
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed ^ 0xdd);
    let pts = sample_points(s, points);
    let mut r = StructureResiduals {
        d_squared_zero: Tri::Yes,
        d_q_squared: 0.0,
        projected_d: 0.0,
        projected_d_star: 0.0,
        sandwich: None,
        sandwich_mixed: None,
        points: pts.len(),
    };
    let pq = |f: &Form| mat_apply(&ops.pi_q, f);
    for k in 0..=s.n() {
        let u = random_poly_form(s, k, &mut rng);
        let du = ops.d.apply(s, &u)?;
        if k + 1 < s.n() {
            r.d_squared_zero = r.d_squared_zero.and(ops.d.apply(s, &du)?.is_zero());
        }
        let qq = ops.d_q.apply(s, &ops.d_q.apply(s, &u)?)?;
        let pd = pq(&ops.d.apply(s, &pq(&u))?).sub(&pq(&du))?;
        let ds_pu = ops.d_star.apply(s, &pq(&u))?;
        let pds = pq(&ds_pu).sub(&ds_pu)?;
        for x in &pts {
            r.d_q_squared = r.d_q_squared.max(pointwise_norm(ops, &qq, x)?);
            r.projected_d = r.projected_d.max(pointwise_norm(ops, &pd, x)?);
            r.projected_d_star = r.projected_d_star.max(pointwise_norm(ops, &pds, x)?);
        }
    }
    if let Some(m) = s.m() {
        let (mut hol, mut mixed): (f64, f64) = (0.0, 0.0);
        let xis = sample_covectors(s.n(), 4 * pts.len(), s.seed ^ 0x218);
        for (i, x) in pts.iter().enumerate() {
            let fd = fiber_projectors(s, x)?;
            for xi in &xis[4 * i..4 * i + 4] {
                let xi_u = fd.covector(s, xi)?;
                let on_w = |k: usize| fd.w_mask & (1 << k) != 0;
                let w_only: Vec<C> = (0..fd.n).map(|k| if on_w(k) { xi_u[k] } else { C::new(0.0, 0.0) }).collect();
                let part = |hol: bool| -> Vec<C> {
                    (0..fd.n).map(|k| if (k < m) == hol { w_only[k] } else { C::new(0.0, 0.0) }).collect()
                };
                hol = hol.max(sandwich_norm(&fd, &part(true), &part(false)));
                mixed = mixed.max(sandwich_norm(&fd, &w_only, &w_only));
            }
        }
        r.sandwich = Some(hol);
        r.sandwich_mixed = Some(mixed);
    }
    Ok(r)
}

/// One named check of a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    Audit,
    Bracket,
    Hoermander,
    Symbols,
    Structure,
    Adjointness,
    Kaehler,
    Identity,
    Obstruct,
    Witness,
}

impl Check {
    pub fn all() -> [Check; 10] {
        use Check::*;
        [Audit, Bracket, Hoermander, Symbols, Structure, Adjointness, Kaehler, Identity, Obstruct, Witness]
    }

    pub fn name(self) -> &'static str {
        match self {
            Check::Audit => "audit",
            Check::Bracket => "bracket",
            Check::Hoermander => "hoermander",
            Check::Symbols => "symbols",
            Check::Structure => "structure",
            Check::Adjointness => "adjointness",
            Check::Kaehler => "kaehler",
            Check::Identity => "identity",
            Check::Obstruct => "obstruct",
            Check::Witness => "witness",
        }
    }
}

impl FromStr for Check {
    type Err = Error;

    fn from_str(s: &str) -> Result<Check> {
        Check::all()
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Validation(vec![format!("unknown check `{s}`")]))
    }
}

#[derive(Debug, Clone)]
pub struct CheckSet {
    pub checks: Vec<Check>,
    pub symbol_pairs: usize,
    pub witness_trials: usize,
}

impl Default for CheckSet {
    fn default() -> Self {
        CheckSet {
            checks: Check::all().to_vec(),
            symbol_pairs: 100,
            witness_trials: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
    Error,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub check: Check,
    pub status: Status,
    pub data: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub scenario: String,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl Report {
    pub fn get(&self, c: Check) -> Option<&CheckResult> {
        self.checks.iter().find(|r| r.check == c)
    }

    /// The report as JSON text, floats with 17 significant digits.
    pub fn to_json(&self) -> String {
        format_json(&serde_json::to_value(self).expect("report serializes"))
    }
}

/// Indented JSON text with every float written as `d.dddddddddddddddde±x`.
pub fn format_json(v: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, v, 0);
    out.push('\n');
    out
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |out: &mut String, k: usize| out.extend(std::iter::repeat_n(' ', 2 * k));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                let x = n.as_f64().expect("f64");
                let _ = write!(out, "{x:.16e}");
            } else {
                let _ = write!(out, "{n}");
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string")),
        Value::Array(a) if a.is_empty() => out.push_str("[]"),
        Value::Array(a) => {
            out.push_str("[\n");
            for (i, x) in a.iter().enumerate() {
                pad(out, indent + 1);
                write_value(out, x, indent + 1);
                out.push_str(if i + 1 < a.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push(']');
        }
        Value::Object(o) if o.is_empty() => out.push_str("{}"),
        Value::Object(o) => {
            out.push_str("{\n");
            for (i, (k, x)) in o.iter().enumerate() {
                pad(out, indent + 1);
                out.push_str(&serde_json::to_string(k).expect("key"));
                out.push_str(": ");
                write_value(out, x, indent + 1);
                out.push_str(if i + 1 < o.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push('}');
        }
    }
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("serializable")
}

fn pass_if(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

/// Whether the scenario carries a weak-harmonicity witness: a proper,
/// bracket-generating distribution.
pub fn has_witness(s: &Scenario) -> bool {
    s.distribution.len() < s.n() && bracket_generating(s, BRACKET_DEPTH).is_ok()
}

fn run_check(s: &Scenario, ops: &Result<CharacteristicOps>, c: Check, set: &CheckSet) -> Result<(Status, Value)> {
    let ops = || ops.as_ref().map_err(Clone::clone);
    let skip = |why: &str| Ok((Status::Skipped, json!({ "reason": why })));
    match c {
        Check::Audit => {
            let a = constant_rank_audit(s, 64)?;
            Ok((pass_if(a.passed), to_value(&a)))
        }
        Check::Bracket => Ok(match bracket_generating(s, BRACKET_DEPTH) {
            Ok(b) => (Status::Pass, json!({ "bracket_generating": true, "step": b.step, "ranks": b.ranks })),
            Err(Error::MaxDepthExceeded { depth, ranks }) => {
                (Status::Pass, json!({ "bracket_generating": false, "depth": depth, "ranks": ranks }))
            }
            Err(e) => return Err(e),
        }),
        Check::Hoermander => {
            let fibers = sample_points(s, 6)
                .iter()
                .map(|x| fiber_projectors(s, x))
                .collect::<Result<Vec<_>>>()?;
            let h = hoermander_applicability(s, &fibers, &sample_covectors(s.n(), 8, s.seed ^ 0x40))?;
            Ok((Status::Pass, to_value(&h)))
        }
        Check::Symbols => {
            let r = symbol_residuals(s, ops()?, set.symbol_pairs)?;
            Ok((pass_if(r.max() < SYMBOL_TOL), to_value(&r)))
        }
        Check::Structure => {
            let r = structure_residuals(s, ops()?, 6)?;
            Ok((pass_if(r.passed()), to_value(&r)))
        }
        Check::Adjointness => {
            let r = l2_adjointness(s, ops()?, 4, 48)?;
            Ok((pass_if(r.max_defect < ADJOINT_TOL), to_value(&r)))
        }
        Check::Kaehler => {
            if !s.is_complex() {
                return skip("real scenario");
            }
            if s.distribution.len() != s.n() {
                return skip("distribution is not the whole tangent space");
            }
            let r = kaehler_check(s, 6, 4)?;
            Ok((pass_if(r.consistent), to_value(&r)))
        }
        Check::Identity => {
            if !s.is_complex() {
                return skip("real scenario");
            }
            let r = sub_kaehler_residual(s, 8, 4)?;
            Ok((pass_if(r.max_residual < IDENTITY_TOL), to_value(&r)))
        }
        Check::Obstruct => {
            if !s.is_complex() {
                return skip("real scenario");
            }
            let hd = hermitian_data(s)?;
            let v = involutivity_verdict(s, &hd, 8)?;
            let r = obstruction_residuals(s, ops()?, set.symbol_pairs)?;
            let ok = v.consistent && r.order1 < OBSTRUCTION_ORDER1_TOL && r.order2 < OBSTRUCTION_ORDER2_TOL;
            Ok((pass_if(ok), json!({ "verdict": to_value(&v), "symbol": to_value(&r) })))
        }
        Check::Witness => {
            if !has_witness(s) {
                return skip("distribution is not proper and bracket-generating");
            }
            let w = build_witness(s, WitnessKind::for_scenario(s))?;
            let r = verify_with_ops(&w, s, ops()?, set.witness_trials)?;
            let mut v = to_value(&r);
            v["witness"] = to_value(&w);
            Ok((pass_if(r.passed), v))
        }
    }
}

/// Runs the requested checks; failures and errors are recorded in the
/// report, never returned.
pub fn run_report(s: &Scenario, set: &CheckSet, seed: Option<u64>) -> Report {
    let mut s = s.clone();
    if let Some(seed) = seed {
        s.seed = seed;
    }
    let ops = build_characteristic_ops(&s);
    let mut checks = Vec::with_capacity(set.checks.len());
    for &c in &set.checks {
        let (status, data) = match run_check(&s, &ops, c, set) {
            Ok(r) => r,
            Err(e) => (Status::Error, json!({ "error": e.to_string() })),
        };
        checks.push(CheckResult { check: c, status, data });
    }
    Report {
        schema: SCHEMA,
        scenario: s.name.clone(),
        seed: s.seed,
        passed: checks.iter().all(|r| matches!(r.status, Status::Pass | Status::Skipped)),
        checks,
    }
}
