//! A small closed-form expression language for metric components, with exact
//! first and second derivatives propagated structurally (second-order forward
//! mode), not by finite differences.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Built-in unary functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Ln,
    Sin,
    Cos,
    Sinh,
    Cosh,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            _ => return None,
        })
    }
}

/// Abstract syntax tree over literals, variables `x1..xn`, arithmetic, powers
/// with literal exponents, and the built-in functions.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// 0-based variable index; `x1` parses to `Var(0)`.
    Var(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, f64),
    Neg(Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    pub fn add(self, rhs: Expr) -> Expr {
        Expr::Add(Box::new(self), Box::new(rhs))
    }

    pub fn sub(self, rhs: Expr) -> Expr {
        Expr::Sub(Box::new(self), Box::new(rhs))
    }

    pub fn mul(self, rhs: Expr) -> Expr {
        Expr::Mul(Box::new(self), Box::new(rhs))
    }

    pub fn div(self, rhs: Expr) -> Expr {
        Expr::Div(Box::new(self), Box::new(rhs))
    }

    pub fn pow(self, p: f64) -> Expr {
        Expr::Pow(Box::new(self), p)
    }

    pub fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }

    pub fn call(f: Func, arg: Expr) -> Expr {
        Expr::Call(f, Box::new(arg))
    }

    /// Largest variable index used, plus one.
    pub fn min_vars(&self) -> usize {
        match self {
            Expr::Num(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.min_vars().max(b.min_vars())
            }
            Expr::Pow(a, _) => a.min_vars(),
            Expr::Neg(a) => a.min_vars(),
            Expr::Call(_, a) => a.min_vars(),
        }
    }

    /// Shift every variable index up by `offset` (`x1 -> x{1+offset}`).
    pub fn shift_vars(&self, offset: usize) -> Expr {
        match self {
            Expr::Num(v) => Expr::Num(*v),
            Expr::Var(i) => Expr::Var(i + offset),
            Expr::Add(a, b) => a.shift_vars(offset).add(b.shift_vars(offset)),
            Expr::Sub(a, b) => a.shift_vars(offset).sub(b.shift_vars(offset)),
            Expr::Mul(a, b) => a.shift_vars(offset).mul(b.shift_vars(offset)),
            Expr::Div(a, b) => a.shift_vars(offset).div(b.shift_vars(offset)),
            Expr::Pow(a, p) => a.shift_vars(offset).pow(*p),
            Expr::Neg(a) => a.shift_vars(offset).neg(),
            Expr::Call(f, a) => Expr::call(*f, a.shift_vars(offset)),
        }
    }
}

impl fmt::Display for Expr {
    /// Fully parenthesized form; parsing the output reproduces the AST.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, p) => {
                // unary minus binds looser than `^`, so a negative base must
                // keep its own parentheses
                let needs_parens =
                    matches!(**a, Expr::Neg(_)) || matches!(**a, Expr::Num(v) if v.is_sign_negative());
                if needs_parens {
                    write!(f, "(({a})^")?;
                } else {
                    write!(f, "({a}^")?;
                }
                if *p < 0.0 {
                    write!(f, "-{})", -p)
                } else {
                    write!(f, "{p})")
                }
            }
            Expr::Neg(a) => write!(f, "-{a}"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

/// Value, gradient, and symmetric Hessian of an expression at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
}

impl Jet2 {
    fn constant(v: f64, n: usize) -> Jet2 {
        Jet2 {
            value: v,
            grad: DVector::zeros(n),
            hess: DMatrix::zeros(n, n),
        }
    }

    fn variable(i: usize, v: f64, n: usize) -> Jet2 {
        let mut grad = DVector::zeros(n);
        grad[i] = 1.0;
        Jet2 {
            value: v,
            grad,
            hess: DMatrix::zeros(n, n),
        }
    }

    fn add(&self, o: &Jet2) -> Jet2 {
        Jet2 {
            value: self.value + o.value,
            grad: &self.grad + &o.grad,
            hess: &self.hess + &o.hess,
        }
    }

    fn sub(&self, o: &Jet2) -> Jet2 {
        Jet2 {
            value: self.value - o.value,
            grad: &self.grad - &o.grad,
            hess: &self.hess - &o.hess,
        }
    }

    fn mul(&self, o: &Jet2) -> Jet2 {
        let outer = &self.grad * o.grad.transpose();
        Jet2 {
            value: self.value * o.value,
            grad: &self.grad * o.value + &o.grad * self.value,
            hess: &self.hess * o.value + &o.hess * self.value + &outer + outer.transpose(),
        }
    }

    /// Compose with a scalar function given its first two derivatives at
    /// `self.value`.
    fn compose(&self, v: f64, d1: f64, d2: f64) -> Jet2 {
        Jet2 {
            value: v,
            grad: &self.grad * d1,
            hess: &self.hess * d1 + &self.grad * self.grad.transpose() * d2,
        }
    }
}

/// Evaluate value, gradient, and Hessian at `point`. Domain failures (ln of a
/// nonpositive argument, division by zero, nonreal powers) are reported with
/// the offending subtree.
pub fn eval_jet2(e: &Expr, point: &DVector<f64>) -> Result<Jet2> {
    let n = point.len();
    if e.min_vars() > n {
        return Err(Error::VariableOutOfRange {
            index: e.min_vars(),
            n_vars: n,
        });
    }
    eval_rec(e, point, n)
}

fn domain_err(e: &Expr, msg: &str) -> Error {
    Error::Domain {
        subtree: e.to_string(),
        message: msg.into(),
    }
}

fn eval_rec(e: &Expr, x: &DVector<f64>, n: usize) -> Result<Jet2> {
    let jet = match e {
        Expr::Num(v) => Jet2::constant(*v, n),
        Expr::Var(i) => Jet2::variable(*i, x[*i], n),
        Expr::Add(a, b) => eval_rec(a, x, n)?.add(&eval_rec(b, x, n)?),
        Expr::Sub(a, b) => eval_rec(a, x, n)?.sub(&eval_rec(b, x, n)?),
        Expr::Mul(a, b) => eval_rec(a, x, n)?.mul(&eval_rec(b, x, n)?),
        Expr::Div(a, b) => {
            let num = eval_rec(a, x, n)?;
            let den = eval_rec(b, x, n)?;
            if den.value == 0.0 {
                return Err(domain_err(e, "division by zero"));
            }
            let inv = den.compose(
                1.0 / den.value,
                -1.0 / (den.value * den.value),
                2.0 / (den.value * den.value * den.value),
            );
            num.mul(&inv)
        }
        Expr::Pow(a, p) => {
            let base = eval_rec(a, x, n)?;
            let u = base.value;
            if u < 0.0 && p.fract() != 0.0 {
                return Err(domain_err(e, "negative base with non-integer exponent"));
            }
            if u == 0.0 && *p < 2.0 && *p != 0.0 && *p != 1.0 {
                return Err(domain_err(e, "zero base with exponent below 2"));
            }
            let v = u.powf(*p);
            let d1 = if *p == 0.0 { 0.0 } else { p * u.powf(p - 1.0) };
            let d2 = if *p == 0.0 || *p == 1.0 {
                0.0
            } else {
                p * (p - 1.0) * u.powf(p - 2.0)
            };
            base.compose(v, d1, d2)
        }
        Expr::Neg(a) => {
            let inner = eval_rec(a, x, n)?;
            Jet2 {
                value: -inner.value,
                grad: -inner.grad,
                hess: -inner.hess,
            }
        }
        Expr::Call(func, a) => {
            let inner = eval_rec(a, x, n)?;
            let u = inner.value;
            let (v, d1, d2) = match func {
                Func::Exp => {
                    let ex = u.exp();
                    (ex, ex, ex)
                }
                Func::Ln => {
                    if u <= 0.0 {
                        return Err(domain_err(e, "ln of a nonpositive argument"));
                    }
                    (u.ln(), 1.0 / u, -1.0 / (u * u))
                }
                Func::Sin => (u.sin(), u.cos(), -u.sin()),
                Func::Cos => (u.cos(), -u.sin(), -u.cos()),
                Func::Sinh => (u.sinh(), u.cosh(), u.sinh()),
                Func::Cosh => (u.cosh(), u.sinh(), u.cosh()),
            };
            inner.compose(v, d1, d2)
        }
    };
    if !jet.value.is_finite() {
        return Err(domain_err(e, "non-finite value"));
    }
    Ok(jet)
}

// ---------------------------------------------------------------------------
// parser
// ---------------------------------------------------------------------------

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    n_vars: usize,
}

/// Parse an expression over variables `x1..x{n_vars}`. Precedence
/// `^ > unary - > *,/ > +,-`; `+ - * /` associate left, parentheses group,
/// whitespace is ignored.
pub fn parse(text: &str, n_vars: usize) -> Result<Expr> {
    let mut p = Parser {
        bytes: text.as_bytes(),
        pos: 0,
        n_vars,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(Error::Syntax {
            offset: p.pos,
            message: format!("unexpected `{}`", p.bytes[p.pos] as char),
        });
    }
    Ok(e)
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Syntax {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = acc.add(self.term()?);
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = acc.sub(self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    acc = acc.mul(self.factor()?);
                }
                Some(b'/') => {
                    self.pos += 1;
                    acc = acc.div(self.factor()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        // unary minus binds looser than `^`: -x^2 is -(x^2)
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(self.factor()?.neg());
        }
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let neg = if self.bytes.get(self.pos) == Some(&b'-') {
                self.pos += 1;
                true
            } else {
                false
            };
            let p = self.number()?;
            return Ok(base.pow(if neg { -p } else { p }));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => Ok(Expr::Num(self.number()?)),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            Some(c) => Err(self.err(format!("unexpected `{}`", c as char))),
        }
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() {
            let c = self.bytes[self.pos];
            if c.is_ascii_digit() || c == b'.' {
                self.pos += 1;
            } else if (c == b'e' || c == b'E')
                && self.pos > start
                && self
                    .bytes
                    .get(self.pos + 1)
                    .is_some_and(|&d| d.is_ascii_digit() || d == b'+' || d == b'-')
            {
                self.pos += 2;
            } else {
                break;
            }
        }
        if self.pos == start {
            return Err(self.err("expected a number"));
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii");
        text.parse::<f64>().map_err(|_| Error::Syntax {
            offset: start,
            message: format!("malformed number `{text}`"),
        })
    }

    fn identifier(&mut self) -> Result<Expr> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() {
            let c = self.bytes[self.pos];
            if c.is_ascii_alphanumeric() || c == b'_' {
                self.pos += 1;
            } else {
                break;
            }
        }
        let name = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii");
        if let Some(idx_text) = name.strip_prefix('x') {
            if let Ok(idx) = idx_text.parse::<usize>() {
                if idx == 0 || idx > self.n_vars {
                    return Err(Error::VariableOutOfRange {
                        index: idx,
                        n_vars: self.n_vars,
                    });
                }
                return Ok(Expr::Var(idx - 1));
            }
        }
        if let Some(func) = Func::from_name(name) {
            if self.peek() != Some(b'(') {
                return Err(self.err(format!("expected `(` after `{name}`")));
            }
            self.pos += 1;
            let arg = self.expr()?;
            if self.peek() != Some(b')') {
                return Err(self.err("expected `)`"));
            }
            self.pos += 1;
            return Ok(Expr::call(func, arg));
        }
        Err(Error::UnknownIdentifier {
            name: name.into(),
            offset: start,
        })
    }
}
