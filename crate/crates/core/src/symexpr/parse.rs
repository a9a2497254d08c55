//! Infix text grammar for scenario files.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' int | '^' '(' int ')')?
//! primary := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Numbers (including decimals) are read as exact rationals. Known
//! functions are `exp`, `sin`, `cos`, `factor`, the non-smooth leaves
//! `absRe`, `abs`, `sign`, `pos`, and in complex contexts `conj`, `re`,
//! `im` and the constant `i`. Any other call becomes an unbound leaf.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::One;
use thiserror::Error;

use super::{CExpr, ComplexCoords, Expr, ExprError, Leaf, LeafFn, Rational};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ParseError {
    #[error("parse error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{0}`")]
    UnknownIdent(String),
    #[error("`{0}` needs a real argument")]
    ComplexArgument(String),
    #[error("expression is not real")]
    NotReal,
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Names visible to the parser.
#[derive(Clone, Default)]
pub struct ParseContext {
    /// Real chart slot names.
    pub real: Vec<String>,
    /// Complex coordinate names with their real slot pairs.
    pub complex: Vec<(String, (usize, usize))>,
    /// Extra leaf evaluators by name.
    pub leaves: HashMap<String, LeafFn>,
}

impl ParseContext {
    pub fn real(names: &[&str]) -> ParseContext {
        ParseContext {
            real: names.iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        }
    }

    /// Complex coordinates `z_k` with real slots `2k`, `2k + 1`, which are
    /// also addressable as `<name>_re` and `<name>_im`.
    pub fn complex(names: &[&str]) -> ParseContext {
        let cc = ComplexCoords::interleaved(names.len());
        let mut real = Vec::new();
        for n in names {
            real.push(format!("{n}_re"));
            real.push(format!("{n}_im"));
        }
        ParseContext {
            real,
            complex: names
                .iter()
                .zip(cc.pairs)
                .map(|(n, p)| (n.to_string(), p))
                .collect(),
            leaves: HashMap::new(),
        }
    }

    pub fn with_leaf(mut self, name: &str, f: LeafFn) -> ParseContext {
        self.leaves.insert(name.to_string(), f);
        self
    }
}

pub fn parse_complex(src: &str, ctx: &ParseContext) -> Result<CExpr, ParseError> {
    let mut p = Parser {
        src: src.as_bytes(),
        pos: 0,
        ctx,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

pub fn parse_real(src: &str, ctx: &ParseContext) -> Result<Expr, ParseError> {
    let e = parse_complex(src, ctx)?;
    if !e.im.is_zero_structural() {
        return Err(ParseError::NotReal);
    }
    Ok(e.re)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    ctx: &'a ParseContext,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> ParseError {
        ParseError::Syntax {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<CExpr, ParseError> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                acc = acc.add(&self.term()?);
            } else if self.eat(b'-') {
                acc = acc.sub(&self.term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<CExpr, ParseError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat(b'*') {
                acc = acc.mul(&self.unary()?);
            } else if self.eat(b'/') {
                acc = acc.div(&self.unary()?)?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<CExpr, ParseError> {
        if self.eat(b'-') {
            return Ok(self.unary()?.neg());
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<CExpr, ParseError> {
        let base = self.primary()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        let k = if self.eat(b'(') {
            let k = self.int()?;
            self.expect(b')')?;
            k
        } else {
            self.int()?
        };
        Ok(base.powi(k)?)
    }

    fn int(&mut self) -> Result<i32, ParseError> {
        let neg = self.eat(b'-');
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        let k: i32 = s.parse().map_err(|_| self.err("expected integer exponent"))?;
        Ok(if neg { -k } else { k })
    }

    fn number(&mut self) -> Result<Rational, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let int_part = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        let mut frac = "";
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            let fs = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            frac = std::str::from_utf8(&self.src[fs..self.pos]).unwrap_or("");
        }
        let digits = format!("{int_part}{frac}");
        let n: BigInt = digits.parse().map_err(|_| self.err("bad number"))?;
        let d = num_traits::pow(BigInt::from(10), frac.len());
        Ok(Rational::new(n, d))
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn primary(&mut self) -> Result<CExpr, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                Ok(CExpr::real(Expr::constant(self.number()?)))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let name = self.ident();
                if self.eat(b'(') {
                    let mut args = vec![self.expr()?];
                    while self.eat(b',') {
                        args.push(self.expr()?);
                    }
                    self.expect(b')')?;
                    self.call(&name, args)
                } else {
                    self.variable(&name)
                }
            }
            _ => Err(self.err("expected a number, name or `(`")),
        }
    }

    fn variable(&self, name: &str) -> Result<CExpr, ParseError> {
        if let Some(i) = self.ctx.real.iter().position(|n| n == name) {
            return Ok(CExpr::real(Expr::coord(i)));
        }
        if let Some((_, (x, y))) = self.ctx.complex.iter().find(|(n, _)| n == name) {
            return Ok(CExpr::new(Expr::coord(*x), Expr::coord(*y)));
        }
        if name == "i" && !self.ctx.complex.is_empty() {
            return Ok(CExpr::i());
        }
        Err(ParseError::UnknownIdent(name.to_string()))
    }

    fn call(&self, name: &str, args: Vec<CExpr>) -> Result<CExpr, ParseError> {
        let one = |args: &Vec<CExpr>| -> Result<CExpr, ParseError> {
            if args.len() == 1 {
                Ok(args[0].clone())
            } else {
                Err(ParseError::Syntax {
                    pos: self.pos,
                    msg: format!("`{name}` takes one argument"),
                })
            }
        };
        let real_arg = |args: &Vec<CExpr>| -> Result<Expr, ParseError> {
            let a = one(args)?;
            if a.im.is_zero_structural() {
                Ok(a.re)
            } else {
                Err(ParseError::ComplexArgument(name.to_string()))
            }
        };
        match name {
            "exp" => {
                let a = one(&args)?;
                let m = Expr::exp(a.re.clone());
                if a.im.is_zero_structural() {
                    return Ok(CExpr::real(m));
                }
                Ok(CExpr::new(m.mul(&Expr::cos(a.im.clone())), m.mul(&Expr::sin(a.im))))
            }
            "sin" | "cos" => {
                let a = one(&args)?;
                if a.im.is_zero_structural() {
                    let f = if name == "sin" { Expr::sin(a.re) } else { Expr::cos(a.re) };
                    return Ok(CExpr::real(f));
                }
                let half = Rational::new(BigInt::one(), BigInt::from(2));
                let ch = Expr::exp(a.im.clone()).add(&Expr::exp(a.im.neg())).scale(&half);
                let sh = Expr::exp(a.im.clone()).sub(&Expr::exp(a.im.neg())).scale(&half);
                let (s, c) = (Expr::sin(a.re.clone()), Expr::cos(a.re));
                Ok(if name == "sin" {
                    CExpr::new(s.mul(&ch), c.mul(&sh))
                } else {
                    CExpr::new(c.mul(&ch), s.mul(&sh).neg())
                })
            }
            "factor" => {
                let a = one(&args)?;
                Ok(CExpr::new(Expr::factored(&a.re), Expr::factored(&a.im)))
            }
            "conj" => Ok(one(&args)?.conj()),
            "re" => Ok(CExpr::real(one(&args)?.re)),
            "im" => Ok(CExpr::real(one(&args)?.im)),
            "absRe" => {
                let a = one(&args)?;
                Ok(CExpr::real(self.leaf(name, vec![a.re])))
            }
            _ => {
                let known = Leaf::builtin(name, vec![Expr::zero()]).is_some()
                    || self.ctx.leaves.contains_key(name);
                let args = if known {
                    vec![real_arg(&args)?]
                } else {
                    args.into_iter()
                        .map(|a| {
                            if a.im.is_zero_structural() {
                                Ok(a.re)
                            } else {
                                Err(ParseError::ComplexArgument(name.to_string()))
                            }
                        })
                        .collect::<Result<_, _>>()?
                };
                Ok(CExpr::real(self.leaf(name, args)))
            }
        }
    }

    fn leaf(&self, name: &str, args: Vec<Expr>) -> Expr {
        if let Some(f) = self.ctx.leaves.get(name) {
            return Expr::leaf(Leaf::new(name, args, f.clone()));
        }
        match Leaf::builtin(name, args.clone()) {
            Some(l) => Expr::leaf(l),
            None => Expr::leaf(Leaf::unbound(name, args)),
        }
    }
}
