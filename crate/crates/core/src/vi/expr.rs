//! Small expression language for analytic obstacles.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' ['-'] integer)?
//! atom  := number | 'x1' | 'x2' | 'exp' '(' expr ')' | '(' expr ')'
//! ```
//!
//! Derivatives are formed symbolically, so gradient and Laplacian of a parsed
//! obstacle are exact up to rounding.

use std::fmt;

use crate::error::{Error, Result};
use crate::mesh::Point;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, i32),
    Exp(Box<Expr>),
}

use Expr::*;

fn num(e: &Expr) -> Option<f64> {
    match e {
        Num(v) => Some(*v),
        _ => None,
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (num(&a), num(&b)) {
        (Some(x), Some(y)) => Num(x + y),
        (Some(x), _) if x == 0.0 => b,
        (_, Some(y)) if y == 0.0 => a,
        _ => Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (num(&a), num(&b)) {
        (Some(x), Some(y)) => Num(x - y),
        (Some(x), _) if x == 0.0 => neg(b),
        (_, Some(y)) if y == 0.0 => a,
        _ => Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (num(&a), num(&b)) {
        (Some(x), Some(y)) => Num(x * y),
        (Some(x), _) | (_, Some(x)) if x == 0.0 => Num(0.0),
        (Some(x), _) if x == 1.0 => b,
        (_, Some(y)) if y == 1.0 => a,
        _ => Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (num(&a), num(&b)) {
        (Some(x), Some(y)) => Num(x / y),
        (Some(x), _) if x == 0.0 => Num(0.0),
        (_, Some(y)) if y == 1.0 => a,
        _ => Div(Box::new(a), Box::new(b)),
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Num(v) => Num(-v),
        Neg(inner) => *inner,
        e => Neg(Box::new(e)),
    }
}

fn pow(a: Expr, n: i32) -> Expr {
    match (num(&a), n) {
        (Some(x), _) => Num(x.powi(n)),
        (_, 0) => Num(1.0),
        (_, 1) => a,
        _ => Pow(Box::new(a), n),
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let mut p = Parser { s: src.as_bytes(), pos: 0 };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.s.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }

    pub fn eval(&self, x: Point) -> f64 {
        match self {
            Num(v) => *v,
            Var(i) => x[*i],
            Add(a, b) => a.eval(x) + b.eval(x),
            Sub(a, b) => a.eval(x) - b.eval(x),
            Mul(a, b) => a.eval(x) * b.eval(x),
            Div(a, b) => a.eval(x) / b.eval(x),
            Neg(a) => -a.eval(x),
            Pow(a, n) => a.eval(x).powi(*n),
            Exp(a) => a.eval(x).exp(),
        }
    }

    /// Partial derivative with respect to `x1` (`var = 0`) or `x2` (`var = 1`).
    pub fn derivative(&self, var: usize) -> Expr {
        match self {
            Num(_) => Num(0.0),
            Var(i) => Num(if *i == var { 1.0 } else { 0.0 }),
            Add(a, b) => add(a.derivative(var), b.derivative(var)),
            Sub(a, b) => sub(a.derivative(var), b.derivative(var)),
            Mul(a, b) => add(
                mul(a.derivative(var), (**b).clone()),
                mul((**a).clone(), b.derivative(var)),
            ),
            Div(a, b) => div(
                sub(
                    mul(a.derivative(var), (**b).clone()),
                    mul((**a).clone(), b.derivative(var)),
                ),
                pow((**b).clone(), 2),
            ),
            Neg(a) => neg(a.derivative(var)),
            Pow(a, n) => mul(mul(Num(*n as f64), pow((**a).clone(), n - 1)), a.derivative(var)),
            Exp(a) => mul(self.clone(), a.derivative(var)),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Num(v) => write!(f, "{v}"),
            Var(i) => write!(f, "x{}", i + 1),
            Add(a, b) => write!(f, "({a} + {b})"),
            Sub(a, b) => write!(f, "({a} - {b})"),
            Mul(a, b) => write!(f, "({a} * {b})"),
            Div(a, b) => write!(f, "({a} / {b})"),
            Neg(a) => write!(f, "(-{a})"),
            Pow(a, n) => write!(f, "({a}^{n})"),
            Exp(a) => write!(f, "exp({a})"),
        }
    }
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::Parse(format!("{msg} at position {} in expression", self.pos))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut e = self.term()?;
        loop {
            if self.eat(b'+') {
                e = Add(Box::new(e), Box::new(self.term()?));
            } else if self.eat(b'-') {
                e = Sub(Box::new(e), Box::new(self.term()?));
            } else {
                return Ok(e);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut e = self.unary()?;
        loop {
            if self.eat(b'*') {
                e = Mul(Box::new(e), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                e = Div(Box::new(e), Box::new(self.unary()?));
            } else {
                return Ok(e);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            Ok(Neg(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        let negative = self.eat(b'-');
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let digits = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
        let n: i32 = digits.parse().map_err(|_| self.error("expected integer exponent"))?;
        Ok(Pow(Box::new(base), if negative { -n } else { n }))
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.s.len() && self.s[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                match &self.s[start..self.pos] {
                    b"x1" => Ok(Var(0)),
                    b"x2" => Ok(Var(1)),
                    b"exp" => {
                        if !self.eat(b'(') {
                            return Err(self.error("expected `(` after exp"));
                        }
                        let e = self.expr()?;
                        if !self.eat(b')') {
                            return Err(self.error("expected `)`"));
                        }
                        Ok(Exp(Box::new(e)))
                    }
                    other => {
                        self.pos = start;
                        Err(self.error(&format!("unknown identifier `{}`", String::from_utf8_lossy(other))))
                    }
                }
            }
            _ => Err(self.error("expected a number, variable or `(`")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let s = self.s;
        let mut i = self.pos;
        while i < s.len() && (s[i].is_ascii_digit() || s[i] == b'.') {
            i += 1;
        }
        if i < s.len() && (s[i] == b'e' || s[i] == b'E') {
            let mut j = i + 1;
            if j < s.len() && (s[j] == b'+' || s[j] == b'-') {
                j += 1;
            }
            if j < s.len() && s[j].is_ascii_digit() {
                while j < s.len() && s[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        self.pos = i;
        let text = std::str::from_utf8(&s[start..i]).unwrap();
        text.parse().map(Num).map_err(|_| self.error(&format!("bad number `{text}`")))
    }
}
