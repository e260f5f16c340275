//! The rational expression language used for metric components and scales.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := '-' factor | atom ('^' int)?
//! atom   := int | int '/' int | ident | '(' expr ')'
//! ```
//!
//! `^` binds tighter than unary minus, so `-x1^2` is `-(x1^2)`. Exponents may
//! carry a sign (`x1^-2`). Two integer tokens joined by `/` form a rational
//! literal; any other `/` is division. Literals are never negative: a negative
//! constant is `Neg` of a literal.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::jets::{JetScalar, JetSpace, Rational};

/// Where and why parsing failed. Line and column are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown variable `{name}` at {line}:{column}")]
    UnknownVariable {
        name: String,
        line: usize,
        column: usize,
    },
    #[error("zero denominator in literal at {line}:{column}")]
    ZeroDenominator { line: usize, column: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Int(BigInt),
    Rat(Rational),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
}

impl Expr {
    pub fn int(v: i64) -> Expr {
        Expr::rational(&Rational::from_integer(BigInt::from(v)))
    }

    /// A constant, as a non-negative literal wrapped in `Neg` when negative.
    pub fn rational(q: &Rational) -> Expr {
        let mag = q.abs();
        let lit = if mag.is_integer() {
            Expr::Int(mag.to_integer())
        } else {
            Expr::Rat(mag)
        };
        if q.is_negative() {
            Expr::Neg(Box::new(lit))
        } else {
            lit
        }
    }

    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Box::new(a), Box::new(b))
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::Div(Box::new(a), Box::new(b))
    }

    pub fn pow(a: Expr, k: i32) -> Expr {
        Expr::Pow(Box::new(a), k)
    }

    pub fn neg(a: Expr) -> Expr {
        Expr::Neg(Box::new(a))
    }

    /// Literal zero, without looking through structure.
    pub fn is_literal_zero(&self) -> bool {
        matches!(self, Expr::Int(v) if v.is_zero())
    }

    pub fn is_literal_one(&self) -> bool {
        matches!(self, Expr::Int(v) if v.is_one())
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Int(_) | Expr::Rat(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Neg(a) | Expr::Pow(a, _) => a.max_var(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                match (a.max_var(), b.max_var()) {
                    (Some(x), Some(y)) => Some(x.max(y)),
                    (x, y) => x.or(y),
                }
            }
        }
    }

    /// Symbolic partial derivative in variable `var`. No simplification
    /// beyond dropping literal zeros.
    pub fn derivative(&self, var: usize) -> Expr {
        fn is_zero(e: &Expr) -> bool {
            e.is_literal_zero()
        }
        fn add(a: Expr, b: Expr) -> Expr {
            match (is_zero(&a), is_zero(&b)) {
                (true, _) => b,
                (_, true) => a,
                _ => Expr::add(a, b),
            }
        }
        fn sub(a: Expr, b: Expr) -> Expr {
            match (is_zero(&a), is_zero(&b)) {
                (_, true) => a,
                (true, _) => Expr::neg(b),
                _ => Expr::sub(a, b),
            }
        }
        fn mul(a: Expr, b: Expr) -> Expr {
            if is_zero(&a) || is_zero(&b) {
                Expr::int(0)
            } else if a.is_literal_one() {
                b
            } else if b.is_literal_one() {
                a
            } else {
                Expr::mul(a, b)
            }
        }
        match self {
            Expr::Int(_) | Expr::Rat(_) => Expr::int(0),
            Expr::Var(i) => Expr::int(i64::from(*i == var)),
            Expr::Neg(a) => {
                let d = a.derivative(var);
                if is_zero(&d) {
                    d
                } else {
                    Expr::neg(d)
                }
            }
            Expr::Add(a, b) => add(a.derivative(var), b.derivative(var)),
            Expr::Sub(a, b) => sub(a.derivative(var), b.derivative(var)),
            Expr::Mul(a, b) => add(
                mul(a.derivative(var), (**b).clone()),
                mul((**a).clone(), b.derivative(var)),
            ),
            Expr::Div(a, b) => {
                let num = sub(
                    mul(a.derivative(var), (**b).clone()),
                    mul((**a).clone(), b.derivative(var)),
                );
                if is_zero(&num) {
                    num
                } else {
                    Expr::div(num, Expr::pow((**b).clone(), 2))
                }
            }
            Expr::Pow(a, k) => {
                if *k == 0 {
                    return Expr::int(0);
                }
                let inner = mul(Expr::int(i64::from(*k)), Expr::pow((**a).clone(), k - 1));
                mul(inner, a.derivative(var))
            }
        }
    }

    /// Substitutes every variable by an expression.
    pub fn substitute(&self, with: &[Expr]) -> Expr {
        match self {
            Expr::Int(_) | Expr::Rat(_) => self.clone(),
            Expr::Var(i) => with[*i].clone(),
            Expr::Neg(a) => Expr::neg(a.substitute(with)),
            Expr::Add(a, b) => Expr::add(a.substitute(with), b.substitute(with)),
            Expr::Sub(a, b) => Expr::sub(a.substitute(with), b.substitute(with)),
            Expr::Mul(a, b) => Expr::mul(a.substitute(with), b.substitute(with)),
            Expr::Div(a, b) => Expr::div(a.substitute(with), b.substitute(with)),
            Expr::Pow(a, k) => Expr::pow(a.substitute(with), *k),
        }
    }

    /// Exact value at a point, or `None` when a denominator vanishes.
    pub fn eval(&self, point: &[Rational]) -> Option<Rational> {
        Some(match self {
            Expr::Int(v) => Rational::from_integer(v.clone()),
            Expr::Rat(q) => q.clone(),
            Expr::Var(i) => point[*i].clone(),
            Expr::Neg(a) => -a.eval(point)?,
            Expr::Add(a, b) => a.eval(point)? + b.eval(point)?,
            Expr::Sub(a, b) => a.eval(point)? - b.eval(point)?,
            Expr::Mul(a, b) => a.eval(point)? * b.eval(point)?,
            Expr::Div(a, b) => {
                let d = b.eval(point)?;
                if d.is_zero() {
                    return None;
                }
                a.eval(point)? / d
            }
            Expr::Pow(a, k) => {
                let base = a.eval(point)?;
                if *k < 0 && base.is_zero() {
                    return None;
                }
                num_traits::pow::Pow::pow(&base, *k)
            }
        })
    }

    /// Renders the expression with the given coordinate names.
    pub fn display<'a>(&'a self, coords: &'a [String]) -> ExprDisplay<'a> {
        ExprDisplay { expr: self, coords }
    }
}

/// Taylor expansion of `e` about `point` to the given order.
pub fn eval_expr_jet(
    e: &Expr,
    space: &Arc<JetSpace>,
    point: &[Rational],
    order: usize,
) -> Result<JetScalar> {
    assert_eq!(
        point.len(),
        space.nvars(),
        "point dimension differs from jet space"
    );
    Ok(match e {
        Expr::Int(v) => JetScalar::constant(space, order, &Rational::from_integer(v.clone())),
        Expr::Rat(q) => JetScalar::constant(space, order, q),
        Expr::Var(i) => JetScalar::variable(space, order, *i, &point[*i]),
        Expr::Neg(a) => -eval_expr_jet(a, space, point, order)?,
        Expr::Add(a, b) => eval_expr_jet(a, space, point, order)?
            .try_add(&eval_expr_jet(b, space, point, order)?)?,
        Expr::Sub(a, b) => eval_expr_jet(a, space, point, order)?
            .try_sub(&eval_expr_jet(b, space, point, order)?)?,
        Expr::Mul(a, b) => eval_expr_jet(a, space, point, order)?
            .try_mul(&eval_expr_jet(b, space, point, order)?)?,
        Expr::Div(a, b) => eval_expr_jet(a, space, point, order)?
            .try_div(&eval_expr_jet(b, space, point, order)?)?,
        Expr::Pow(a, k) => eval_expr_jet(a, space, point, order)?.powi(*k)?,
    })
}

// Printing precedence: 0 sum, 1 product, 2 unary, 3 power base.
fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 0,
        Expr::Mul(..) | Expr::Div(..) => 1,
        Expr::Neg(_) => 2,
        Expr::Rat(_) => 2,
        Expr::Pow(..) => 3,
        Expr::Int(_) | Expr::Var(_) => 4,
    }
}

pub struct ExprDisplay<'a> {
    expr: &'a Expr,
    coords: &'a [String],
}

impl ExprDisplay<'_> {
    fn write(&self, e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sub = |x: &Expr, min: u8, f: &mut fmt::Formatter<'_>| -> fmt::Result {
            if prec(x) < min {
                f.write_str("(")?;
                self.write(x, f)?;
                f.write_str(")")
            } else {
                self.write(x, f)
            }
        };
        match e {
            Expr::Int(v) => write!(f, "{v}"),
            Expr::Rat(q) => write!(f, "{}/{}", q.numer(), q.denom()),
            Expr::Var(i) => match self.coords.get(*i) {
                Some(name) => f.write_str(name),
                None => write!(f, "x{}", i + 1),
            },
            Expr::Neg(a) => {
                f.write_str("-")?;
                sub(a, 2, f)
            }
            Expr::Add(a, b) => {
                sub(a, 0, f)?;
                f.write_str("+")?;
                sub(b, 1, f)
            }
            Expr::Sub(a, b) => {
                sub(a, 0, f)?;
                f.write_str("-")?;
                sub(b, 1, f)
            }
            Expr::Mul(a, b) => {
                sub(a, 1, f)?;
                f.write_str("*")?;
                sub(b, 2, f)
            }
            Expr::Div(a, b) => {
                sub(a, 1, f)?;
                f.write_str("/")?;
                // `.../2` after an integer would read back as a literal.
                let guard = match &**b {
                    Expr::Int(_) | Expr::Rat(_) => true,
                    Expr::Pow(base, _) => matches!(**base, Expr::Int(_)),
                    _ => false,
                };
                if guard {
                    f.write_str("(")?;
                    self.write(b, f)?;
                    f.write_str(")")
                } else {
                    sub(b, 2, f)
                }
            }
            Expr::Pow(a, k) => {
                sub(a, 4, f)?;
                write!(f, "^{k}")
            }
        }
    }
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(self.expr, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Sym(char),
    End,
}

struct Lexer<'a> {
    chars: core::iter::Peekable<core::str::CharIndices<'a>>,
    line: usize,
    column: usize,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            chars: text.char_indices().peekable(),
            line: 1,
            column: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn tokens(mut self) -> core::result::Result<Vec<Spanned>, ParseError> {
        let mut out = Vec::new();
        loop {
            while self.chars.peek().is_some_and(|&(_, c)| c.is_whitespace()) {
                self.bump();
            }
            let (line, column) = (self.line, self.column);
            let Some(&(_, c)) = self.chars.peek() else {
                out.push(Spanned {
                    tok: Tok::End,
                    line,
                    column,
                });
                return Ok(out);
            };
            let tok = if c.is_ascii_digit() {
                let mut digits = String::new();
                while let Some(&(_, d)) = self.chars.peek() {
                    if !d.is_ascii_digit() {
                        break;
                    }
                    digits.push(d);
                    self.bump();
                }
                Tok::Int(digits.parse().expect("ascii digits"))
            } else if c.is_alphabetic() || c == '_' {
                let mut name = String::new();
                while let Some(&(_, d)) = self.chars.peek() {
                    if !(d.is_alphanumeric() || d == '_') {
                        break;
                    }
                    name.push(d);
                    self.bump();
                }
                Tok::Ident(name)
            } else if "+-*/^()".contains(c) {
                self.bump();
                Tok::Sym(c)
            } else {
                return Err(ParseError::Syntax {
                    line,
                    column,
                    message: format!("unexpected character `{c}`"),
                });
            };
            out.push(Spanned { tok, line, column });
        }
    }
}

struct Parser<'a> {
    toks: Vec<Spanned>,
    pos: usize,
    coords: &'a [String],
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, ahead: usize) -> &Tok {
        let i = (self.pos + ahead).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn here(&self) -> (usize, usize) {
        let s = &self.toks[self.pos];
        (s.line, s.column)
    }

    fn err<T>(&self, message: impl Into<String>) -> core::result::Result<T, ParseError> {
        let (line, column) = self.here();
        Err(ParseError::Syntax {
            line,
            column,
            message: message.into(),
        })
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> core::result::Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Sym('+') => {
                    self.advance();
                    lhs = Expr::add(lhs, self.term()?);
                }
                Tok::Sym('-') => {
                    self.advance();
                    lhs = Expr::sub(lhs, self.term()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> core::result::Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Tok::Sym('*') => {
                    self.advance();
                    lhs = Expr::mul(lhs, self.factor()?);
                }
                Tok::Sym('/') => {
                    self.advance();
                    lhs = Expr::div(lhs, self.factor()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> core::result::Result<Expr, ParseError> {
        if *self.peek() == Tok::Sym('-') {
            self.advance();
            return Ok(Expr::neg(self.factor()?));
        }
        let base = self.atom()?;
        if *self.peek() != Tok::Sym('^') {
            return Ok(base);
        }
        self.advance();
        let exponent = self.exponent()?;
        Ok(Expr::pow(base, exponent))
    }

    fn exponent(&mut self) -> core::result::Result<i32, ParseError> {
        let (open, negative) = match (self.peek().clone(), self.peek_at(1).clone()) {
            (Tok::Sym('('), Tok::Sym('-')) => (true, true),
            (Tok::Sym('('), _) => (true, false),
            (Tok::Sym('-'), _) => (false, true),
            _ => (false, false),
        };
        if open {
            self.advance();
        }
        if negative {
            self.advance();
        }
        let Tok::Int(v) = self.peek().clone() else {
            return self.err("expected an integer exponent");
        };
        let Ok(mut k) = i32::try_from(v) else {
            return self.err("exponent out of range");
        };
        self.advance();
        if negative {
            k = -k;
        }
        if open {
            if *self.peek() != Tok::Sym(')') {
                return self.err("expected `)` after exponent");
            }
            self.advance();
        }
        Ok(k)
    }

    fn atom(&mut self) -> core::result::Result<Expr, ParseError> {
        let (line, column) = self.here();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.advance();
                if let (Tok::Sym('/'), Tok::Int(d)) = (self.peek().clone(), self.peek_at(1).clone())
                {
                    self.advance();
                    let (dl, dc) = self.here();
                    self.advance();
                    if d.is_zero() {
                        return Err(ParseError::ZeroDenominator {
                            line: dl,
                            column: dc,
                        });
                    }
                    let q = Rational::new(v, d);
                    return Ok(if q.is_integer() {
                        Expr::Int(q.to_integer())
                    } else {
                        Expr::Rat(q)
                    });
                }
                Ok(Expr::Int(v))
            }
            Tok::Ident(name) => {
                self.advance();
                match self.coords.iter().position(|c| *c == name) {
                    Some(i) => Ok(Expr::Var(i)),
                    None => Err(ParseError::UnknownVariable { name, line, column }),
                }
            }
            Tok::Sym('(') => {
                self.advance();
                let inner = self.expr()?;
                if *self.peek() != Tok::Sym(')') {
                    return self.err("expected `)`");
                }
                self.advance();
                Ok(inner)
            }
            Tok::End => self.err("unexpected end of input"),
            Tok::Sym(c) => self.err(format!("unexpected `{c}`")),
        }
    }
}

/// Parses `text` over the named coordinates.
pub fn parse_expression(text: &str, coords: &[String]) -> core::result::Result<Expr, ParseError> {
    let toks = Lexer::new(text).tokens()?;
    let mut p = Parser {
        toks,
        pos: 0,
        coords,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.err("trailing input");
    }
    Ok(e)
}

/// Replaces the identifier `r2` by `(c1^2+...+cn^2)`, leaving other
/// identifiers that merely contain `r2` untouched.
pub fn expand_r2(text: &str, coords: &[String]) -> String {
    if coords.iter().any(|c| c == "r2") {
        return text.to_string();
    }
    let mut sum = String::from("(");
    for (i, c) in coords.iter().enumerate() {
        if i > 0 {
            sum.push('+');
        }
        sum.push_str(c);
        sum.push_str("^2");
    }
    sum.push(')');
    let mut out = String::with_capacity(text.len());
    let mut ident = String::new();
    let flush = |ident: &mut String, out: &mut String| {
        if ident == "r2" {
            out.push_str(&sum);
        } else {
            out.push_str(ident);
        }
        ident.clear();
    };
    for c in text.chars() {
        if c.is_alphanumeric() || c == '_' {
            if ident.is_empty() && c.is_ascii_digit() {
                out.push(c);
            } else {
                ident.push(c);
            }
        } else {
            flush(&mut ident, &mut out);
            out.push(c);
        }
    }
    flush(&mut ident, &mut out);
    out
}

/// Convenience: `x1, ..., xn`.
pub fn default_coords(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

/// Parses with `r2` expansion, mapping parse failures into [`Error`].
pub fn parse_with_r2(text: &str, coords: &[String]) -> Result<Expr> {
    parse_expression(&expand_r2(text, coords), coords).map_err(Error::from)
}
