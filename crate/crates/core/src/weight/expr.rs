//! Single-variable arithmetic expressions over `s` with symbolic differentiation.
//!
//! Grammar (whitespace is ignored everywhere):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' '-'? integer)*
//! atom   := number | 's' | func '(' expr ')' | '(' expr ')'
//! func   := 'exp' | 'log' | 'sqrt' | 'tanh'
//! ```
//!
//! Printing produces the minimal parenthesization that reparses to the same tree.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::fmt;

use crate::math;

/// Elementary functions admitted by the grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Tanh,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Tanh => "tanh",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Exp => math::exp(v),
            Func::Log => math::ln(v),
            Func::Sqrt => math::sqrt(v),
            Func::Tanh => math::tanh(v),
        }
    }
}

/// Expression tree in the variable `s`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

/// Parse failure with the byte offset at which it happened and the tokens that
/// would have been accepted there.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub offset: usize,
    pub expected: Vec<&'static str>,
}

impl ParseError {
    pub(crate) fn new(offset: usize, expected: &[&'static str]) -> Self {
        Self {
            offset,
            expected: expected.to_vec(),
        }
    }

    pub(crate) fn shifted(mut self, by: usize) -> Self {
        self.offset += by;
        self
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at byte {}: expected ", self.offset)?;
        for (i, tok) in self.expected.iter().enumerate() {
            if i > 0 {
                f.write_str(" | ")?;
            }
            f.write_str(tok)?;
        }
        Ok(())
    }
}

impl core::error::Error for ParseError {}

impl Expr {
    /// Parses `text` as a complete expression.
    pub fn parse(text: &str) -> Result<Expr, ParseError> {
        let mut p = Parser {
            src: text.as_bytes(),
            pos: 0,
        };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(ParseError::new(p.pos, &["operator", "end of input"]));
        }
        Ok(e)
    }

    pub fn eval(&self, s: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var => s,
            Expr::Neg(a) => -a.eval(s),
            Expr::Add(a, b) => a.eval(s) + b.eval(s),
            Expr::Sub(a, b) => a.eval(s) - b.eval(s),
            Expr::Mul(a, b) => a.eval(s) * b.eval(s),
            Expr::Div(a, b) => a.eval(s) / b.eval(s),
            Expr::Pow(a, k) => math::powi(a.eval(s), *k),
            Expr::Call(func, a) => func.apply(a.eval(s)),
        }
    }

    /// Symbolic derivative with respect to `s`, lightly simplified.
    pub fn derivative(&self) -> Expr {
        match self {
            Expr::Num(_) => Expr::Num(0.0),
            Expr::Var => Expr::Num(1.0),
            Expr::Neg(a) => neg(a.derivative()),
            Expr::Add(a, b) => add(a.derivative(), b.derivative()),
            Expr::Sub(a, b) => sub(a.derivative(), b.derivative()),
            Expr::Mul(a, b) => add(
                mul(a.derivative(), (**b).clone()),
                mul((**a).clone(), b.derivative()),
            ),
            Expr::Div(a, b) => div(
                sub(
                    mul(a.derivative(), (**b).clone()),
                    mul((**a).clone(), b.derivative()),
                ),
                pow((**b).clone(), 2),
            ),
            Expr::Pow(a, k) => {
                let coeff = if *k < 0 {
                    neg(Expr::Num(-(*k as f64)))
                } else {
                    Expr::Num(*k as f64)
                };
                mul(mul(coeff, pow((**a).clone(), k - 1)), a.derivative())
            }
            Expr::Call(func, a) => {
                let inner = (**a).clone();
                let da = a.derivative();
                match func {
                    Func::Exp => mul(self.clone(), da),
                    Func::Log => div(da, inner),
                    Func::Sqrt => div(da, mul(Expr::Num(2.0), self.clone())),
                    Func::Tanh => mul(sub(Expr::Num(1.0), pow(self.clone(), 2)), da),
                }
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Num(v) if v.is_sign_negative() => 0,
            Expr::Num(_) | Expr::Var | Expr::Call(..) => 5,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        let wrap = self.precedence() < min_prec;
        if wrap {
            f.write_str("(")?;
        }
        match self {
            Expr::Num(v) => write!(f, "{v:?}")?,
            Expr::Var => f.write_str("s")?,
            Expr::Neg(a) => {
                f.write_str("-")?;
                a.write_at(f, 3)?;
            }
            Expr::Add(a, b) => {
                a.write_at(f, 1)?;
                f.write_str(" + ")?;
                b.write_at(f, 2)?;
            }
            Expr::Sub(a, b) => {
                a.write_at(f, 1)?;
                f.write_str(" - ")?;
                b.write_at(f, 2)?;
            }
            Expr::Mul(a, b) => {
                a.write_at(f, 2)?;
                f.write_str("*")?;
                b.write_at(f, 3)?;
            }
            Expr::Div(a, b) => {
                a.write_at(f, 2)?;
                f.write_str("/")?;
                b.write_at(f, 3)?;
            }
            Expr::Pow(a, k) => {
                a.write_at(f, 5)?;
                write!(f, "^{k}")?;
            }
            Expr::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.write_at(f, 0)?;
                f.write_str(")")?;
            }
        }
        if wrap {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}

fn num(e: &Expr) -> Option<f64> {
    match e {
        Expr::Num(v) => Some(*v),
        _ => None,
    }
}

fn constant(v: f64) -> Expr {
    if v < 0.0 {
        Expr::Neg(Box::new(Expr::Num(-v)))
    } else {
        Expr::Num(v)
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(v) if v == 0.0 => Expr::Num(0.0),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (num(&a), num(&b)) {
        (Some(x), Some(y)) => constant(x + y),
        (Some(x), _) if x == 0.0 => b,
        (_, Some(y)) if y == 0.0 => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (num(&a), num(&b)) {
        (Some(x), Some(y)) => constant(x - y),
        (Some(x), _) if x == 0.0 => neg(b),
        (_, Some(y)) if y == 0.0 => a,
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (num(&a), num(&b)) {
        (Some(x), Some(y)) => constant(x * y),
        (Some(x), _) | (_, Some(x)) if x == 0.0 => Expr::Num(0.0),
        (Some(x), _) if x == 1.0 => b,
        (_, Some(y)) if y == 1.0 => a,
        _ => match (a, b) {
            (Expr::Neg(x), y) => neg(mul(*x, y)),
            (x, Expr::Neg(y)) => neg(mul(x, *y)),
            (x, y) => Expr::Mul(Box::new(x), Box::new(y)),
        },
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (num(&a), num(&b)) {
        (Some(x), _) if x == 0.0 => Expr::Num(0.0),
        (_, Some(y)) if y == 1.0 => a,
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

fn pow(a: Expr, k: i32) -> Expr {
    match k {
        0 => Expr::Num(1.0),
        1 => a,
        _ => Expr::Pow(Box::new(a), k),
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

const ATOM_START: &[&str] = &["number", "s", "exp", "log", "sqrt", "tanh", "(", "-"];

impl Parser<'_> {
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

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let mut base = self.atom()?;
        while self.eat(b'^') {
            let negative = self.eat(b'-');
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if matches!(self.src.get(self.pos), Some(b'.' | b'e' | b'E')) {
                return Err(ParseError::new(start, &["integer exponent"]));
            }
            let digits = core::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
            let mut k: i32 = digits
                .parse()
                .map_err(|_| ParseError::new(start, &["integer exponent"]))?;
            if negative {
                k = -k;
            }
            base = Expr::Pow(Box::new(base), k);
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let Some(c) = self.peek() else {
            return Err(ParseError::new(self.pos, ATOM_START));
        };
        if c == b'(' {
            self.pos += 1;
            let inner = self.expr()?;
            if !self.eat(b')') {
                return Err(ParseError::new(self.pos, &[")"]));
            }
            return Ok(inner);
        }
        if c.is_ascii_digit() || c == b'.' {
            return self.number();
        }
        if c.is_ascii_alphabetic() {
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                self.pos += 1;
            }
            let func = match &self.src[start..self.pos] {
                b"s" => return Ok(Expr::Var),
                b"exp" => Func::Exp,
                b"log" => Func::Log,
                b"sqrt" => Func::Sqrt,
                b"tanh" => Func::Tanh,
                _ => return Err(ParseError::new(start, &["s", "exp", "log", "sqrt", "tanh"])),
            };
            if !self.eat(b'(') {
                return Err(ParseError::new(self.pos, &["("]));
            }
            let arg = self.expr()?;
            if !self.eat(b')') {
                return Err(ParseError::new(self.pos, &[")"]));
            }
            return Ok(Expr::Call(func, Box::new(arg)));
        }
        Err(ParseError::new(self.pos, ATOM_START))
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let len = scan_float(&self.src[start..]);
        if len == 0 {
            return Err(ParseError::new(start, &["number"]));
        }
        self.pos += len;
        let text = core::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        let v: f64 = text
            .parse()
            .map_err(|_| ParseError::new(start, &["number"]))?;
        if !v.is_finite() {
            return Err(ParseError::new(start, &["finite number"]));
        }
        Ok(Expr::Num(v))
    }
}

/// Length of the longest prefix of `bytes` that looks like an unsigned decimal
/// float (`12`, `1.5`, `.5`, `2e-3`, `1.0E+8`).
pub(crate) fn scan_float(bytes: &[u8]) -> usize {
    let mut i = 0;
    let mut mantissa_digits = 0;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
        mantissa_digits += 1;
    }
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
            mantissa_digits += 1;
        }
    }
    if mantissa_digits == 0 {
        return 0;
    }
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut j = i + 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        let exp_start = j;
        while j < bytes.len() && bytes[j].is_ascii_digit() {
            j += 1;
        }
        if j > exp_start {
            i = j;
        }
    }
    i
}

/// Collects every distinct node kind in `e`; used by tests to check grammar coverage.
#[cfg(test)]
fn kinds(e: &Expr, out: &mut Vec<&'static str>) {
    let name = match e {
        Expr::Num(_) => "num",
        Expr::Var => "var",
        Expr::Neg(_) => "neg",
        Expr::Add(..) => "add",
        Expr::Sub(..) => "sub",
        Expr::Mul(..) => "mul",
        Expr::Div(..) => "div",
        Expr::Pow(..) => "pow",
        Expr::Call(..) => "call",
    };
    if !out.contains(&name) {
        out.push(name);
    }
    match e {
        Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => kinds(a, out),
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
            kinds(a, out);
            kinds(b, out);
        }
        _ => {}
    }
}
