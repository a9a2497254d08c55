use std::fmt;

use num_complex::Complex64;

use super::{Expr, ExprError, Rational, Tri};

/// Pairs of real chart slots `(re, im)` forming the complex coordinates
/// `z_k = x_k + i y_k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComplexCoords {
    pub pairs: Vec<(usize, usize)>,
}

impl ComplexCoords {
    /// Standard layout: `z_k` has real part in slot `2k` and imaginary part
    /// in slot `2k + 1`.
    pub fn interleaved(m: usize) -> ComplexCoords {
        ComplexCoords {
            pairs: (0..m).map(|k| (2 * k, 2 * k + 1)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.pairs.len()
    }

    pub fn z(&self, k: usize) -> CExpr {
        let (x, y) = self.pairs[k];
        CExpr::new(Expr::coord(x), Expr::coord(y))
    }

    pub fn zbar(&self, k: usize) -> CExpr {
        self.z(k).conj()
    }
}

/// Complex scalar `re + i im` with real symbolic parts.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct CExpr {
    pub re: Expr,
    pub im: Expr,
}

impl CExpr {
    pub fn new(re: Expr, im: Expr) -> CExpr {
        CExpr { re, im }
    }

    pub fn real(re: Expr) -> CExpr {
        CExpr { re, im: Expr::zero() }
    }

    pub fn zero() -> CExpr {
        CExpr::default()
    }

    pub fn one() -> CExpr {
        CExpr::real(Expr::one())
    }

    pub fn i() -> CExpr {
        CExpr::new(Expr::zero(), Expr::one())
    }

    pub fn int(n: i64) -> CExpr {
        CExpr::real(Expr::int(n))
    }

    pub fn constant(re: Rational, im: Rational) -> CExpr {
        CExpr::new(Expr::constant(re), Expr::constant(im))
    }

    pub fn is_zero_structural(&self) -> bool {
        self.re.is_zero_structural() && self.im.is_zero_structural()
    }

    pub fn is_real_structural(&self) -> bool {
        self.im.is_zero_structural()
    }

    pub fn as_constant(&self) -> Option<(Rational, Rational)> {
        Some((self.re.as_constant()?, self.im.as_constant()?))
    }

    pub fn add(&self, o: &CExpr) -> CExpr {
        CExpr::new(self.re.add(&o.re), self.im.add(&o.im))
    }

    pub fn sub(&self, o: &CExpr) -> CExpr {
        CExpr::new(self.re.sub(&o.re), self.im.sub(&o.im))
    }

    pub fn neg(&self) -> CExpr {
        CExpr::new(self.re.neg(), self.im.neg())
    }

    pub fn conj(&self) -> CExpr {
        CExpr::new(self.re.clone(), self.im.neg())
    }

    /// Multiplication by `i`.
    pub fn mul_i(&self) -> CExpr {
        CExpr::new(self.im.neg(), self.re.clone())
    }

    pub fn scale(&self, c: &Rational) -> CExpr {
        CExpr::new(self.re.scale(c), self.im.scale(c))
    }

    pub fn scale_real(&self, e: &Expr) -> CExpr {
        CExpr::new(self.re.mul(e), self.im.mul(e))
    }

    pub fn mul(&self, o: &CExpr) -> CExpr {
        if self.is_real_structural() {
            return o.scale_real(&self.re);
        }
        if o.is_real_structural() {
            return self.scale_real(&o.re);
        }
        CExpr::new(
            self.re.mul(&o.re).sub(&self.im.mul(&o.im)),
            self.re.mul(&o.im).add(&self.im.mul(&o.re)),
        )
    }

    /// `|z|^2 = re^2 + im^2`.
    pub fn norm_sqr(&self) -> Expr {
        self.re.mul(&self.re).add(&self.im.mul(&self.im))
    }

    pub fn recip(&self) -> Result<CExpr, ExprError> {
        if self.is_real_structural() {
            return Ok(CExpr::real(self.re.recip()?));
        }
        let inv = Expr::factored(&self.norm_sqr()).recip()?;
        Ok(self.conj().scale_real(&inv))
    }

    pub fn div(&self, o: &CExpr) -> Result<CExpr, ExprError> {
        Ok(self.mul(&o.recip()?))
    }

    pub fn powi(&self, k: i32) -> Result<CExpr, ExprError> {
        if k < 0 {
            return self.recip()?.powi(-k);
        }
        let mut acc = CExpr::one();
        for _ in 0..k {
            acc = acc.mul(self);
        }
        Ok(acc)
    }

    pub fn diff(&self, coord: usize) -> Result<CExpr, ExprError> {
        Ok(CExpr::new(self.re.diff(coord)?, self.im.diff(coord)?))
    }

    /// `d/dz_k = (d/dx_k - i d/dy_k) / 2`.
    pub fn d_dz(&self, cc: &ComplexCoords, k: usize) -> Result<CExpr, ExprError> {
        let (x, y) = cc.pairs[k];
        let dx = self.diff(x)?;
        let dy = self.diff(y)?;
        Ok(dx.sub(&dy.mul_i()).scale(&half()))
    }

    /// `d/dzbar_k = (d/dx_k + i d/dy_k) / 2`.
    pub fn d_dzbar(&self, cc: &ComplexCoords, k: usize) -> Result<CExpr, ExprError> {
        let (x, y) = cc.pairs[k];
        let dx = self.diff(x)?;
        let dy = self.diff(y)?;
        Ok(dx.add(&dy.mul_i()).scale(&half()))
    }

    /// Applies the complex vector field `sum_i v_i d/dx_i` (real slots).
    pub fn derivation(&self, field: &[CExpr]) -> Result<CExpr, ExprError> {
        let mut acc = CExpr::zero();
        for (i, v) in field.iter().enumerate() {
            if v.is_zero_structural() || !(self.re.depends_on(i) || self.im.depends_on(i)) {
                continue;
            }
            acc = acc.add(&v.mul(&self.diff(i)?));
        }
        Ok(acc)
    }

    pub fn eval(&self, point: &[f64]) -> Result<Complex64, ExprError> {
        let re = if self.re.is_zero_structural() { 0.0 } else { self.re.eval(point)? };
        let im = if self.im.is_zero_structural() { 0.0 } else { self.im.eval(point)? };
        Ok(Complex64::new(re, im))
    }

    pub fn is_zero(&self) -> Tri {
        match (self.re.is_zero(), self.im.is_zero()) {
            (Tri::Yes, Tri::Yes) => Tri::Yes,
            (Tri::No, _) | (_, Tri::No) => Tri::No,
            _ => Tri::Unknown,
        }
    }

    pub fn canonical(&self) -> CExpr {
        CExpr::new(self.re.canonical(), self.im.canonical())
    }

    pub fn has_leaf(&self) -> bool {
        self.re.has_leaf() || self.im.has_leaf()
    }

    pub fn arity(&self) -> usize {
        self.re.arity().max(self.im.arity())
    }

    pub fn depends_on(&self, coord: usize) -> bool {
        self.re.depends_on(coord) || self.im.depends_on(coord)
    }

    pub fn substitute(&self, subs: &[Expr]) -> Result<CExpr, ExprError> {
        Ok(CExpr::new(self.re.substitute(subs)?, self.im.substitute(subs)?))
    }

    pub fn display<'a>(&'a self, names: &'a [String]) -> CExprDisplay<'a> {
        CExprDisplay { e: self, names }
    }
}

fn half() -> Rational {
    Rational::new(1.into(), 2.into())
}

impl From<Expr> for CExpr {
    fn from(e: Expr) -> Self {
        CExpr::real(e)
    }
}

pub struct CExprDisplay<'a> {
    e: &'a CExpr,
    names: &'a [String],
}

impl fmt::Display for CExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let re = !self.e.re.is_zero_structural();
        let im = !self.e.im.is_zero_structural();
        match (re, im) {
            (false, false) => write!(f, "0"),
            (true, false) => write!(f, "{}", self.e.re.display(self.names)),
            (false, true) => write!(f, "i*({})", self.e.im.display(self.names)),
            (true, true) => write!(
                f,
                "{} + i*({})",
                self.e.re.display(self.names),
                self.e.im.display(self.names)
            ),
        }
    }
}

impl fmt::Debug for CExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display(&[]))
    }
}

impl fmt::Display for CExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display(&[]))
    }
}
