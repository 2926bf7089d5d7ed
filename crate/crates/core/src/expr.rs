//! Scalar coefficient expressions over chart coordinates.
//!
//! A [`ScalarExpr`] is an immutable, reference-counted AST. Construction goes
//! through folding constructors (the arithmetic operators, [`ScalarExpr::powi`],
//! [`ScalarExpr::sin`], ...) which collapse constant subtrees and the neutral
//! elements `0` and `1`. No other simplification is attempted: two expressions
//! are compared by evaluating them, not by canonical form.
//!
//! Grammar accepted by [`parse`], loosest binding first:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' ['-'] integer)?
//! atom   := number | coord | 'pi' | func '(' expr ')' | '(' expr ')'
//! func   := 'sin' | 'cos' | 'exp'
//! ```
//!
//! There is no implicit multiplication and exponents are integer literals.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownIdentifier { offset, .. } => {
                *offset
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("non-finite intermediate value")]
    NonFinite,
    #[error("expression uses coordinate {index} but the point has dimension {dim}")]
    CoordinateOutOfRange { index: usize, dim: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(usize),
    Add(ScalarExpr, ScalarExpr),
    Sub(ScalarExpr, ScalarExpr),
    Mul(ScalarExpr, ScalarExpr),
    Div(ScalarExpr, ScalarExpr),
    Pow(ScalarExpr, i32),
    Neg(ScalarExpr),
    Call(Func, ScalarExpr),
}

/// Immutable expression handle; cloning is a reference-count bump.
#[derive(Clone, PartialEq)]
pub struct ScalarExpr(Arc<Node>);

impl fmt::Debug for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_source(&[] as &[&str]))
    }
}

impl ScalarExpr {
    fn wrap(node: Node) -> Self {
        ScalarExpr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn constant(c: f64) -> Self {
        Self::wrap(Node::Const(c))
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn var(index: usize) -> Self {
        Self::wrap(Node::Var(index))
    }

    pub fn as_const(&self) -> Option<f64> {
        match *self.0 {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    pub fn powi(&self, k: i32) -> Self {
        match k {
            0 => return Self::one(),
            1 => return self.clone(),
            _ => {}
        }
        if let Some(c) = self.as_const() {
            let v = c.powi(k);
            if v.is_finite() && (c != 0.0 || k > 0) {
                return Self::constant(v);
            }
        }
        Self::wrap(Node::Pow(self.clone(), k))
    }

    fn call(func: Func, arg: &ScalarExpr) -> Self {
        if let Some(c) = arg.as_const() {
            let v = func.apply(c);
            if v.is_finite() {
                return Self::constant(v);
            }
        }
        Self::wrap(Node::Call(func, arg.clone()))
    }

    pub fn sin(&self) -> Self {
        Self::call(Func::Sin, self)
    }

    pub fn cos(&self) -> Self {
        Self::call(Func::Cos, self)
    }

    pub fn exp(&self) -> Self {
        Self::call(Func::Exp, self)
    }

    /// Largest coordinate index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self.node() {
            Node::Const(_) => None,
            Node::Var(i) => Some(*i),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.max_var().max(b.max_var())
            }
            Node::Pow(a, _) | Node::Neg(a) | Node::Call(_, a) => a.max_var(),
        }
    }

    /// Exact partial derivative with respect to coordinate `coord`.
    pub fn differentiate(&self, coord: usize) -> ScalarExpr {
        match self.node() {
            Node::Const(_) => Self::zero(),
            Node::Var(i) => {
                if *i == coord {
                    Self::one()
                } else {
                    Self::zero()
                }
            }
            Node::Add(a, b) => a.differentiate(coord) + b.differentiate(coord),
            Node::Sub(a, b) => a.differentiate(coord) - b.differentiate(coord),
            Node::Mul(a, b) => a.differentiate(coord) * b + a * &b.differentiate(coord),
            Node::Div(a, b) => {
                let num = a.differentiate(coord) * b - a * &b.differentiate(coord);
                num / b.powi(2)
            }
            Node::Pow(a, k) => {
                Self::constant(*k as f64) * a.powi(k - 1) * a.differentiate(coord)
            }
            Node::Neg(a) => -a.differentiate(coord),
            Node::Call(func, a) => {
                let da = a.differentiate(coord);
                let outer = match func {
                    Func::Sin => a.cos(),
                    Func::Cos => -a.sin(),
                    Func::Exp => self.clone(),
                };
                outer * da
            }
        }
    }

    /// IEEE-754 evaluation. Poles are reported, never turned into infinities.
    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        let v = match self.node() {
            Node::Const(c) => *c,
            Node::Var(i) => *point.get(*i).ok_or(EvalError::CoordinateOutOfRange {
                index: *i,
                dim: point.len(),
            })?,
            Node::Add(a, b) => a.eval(point)? + b.eval(point)?,
            Node::Sub(a, b) => a.eval(point)? - b.eval(point)?,
            Node::Mul(a, b) => a.eval(point)? * b.eval(point)?,
            Node::Div(a, b) => {
                let num = a.eval(point)?;
                let den = b.eval(point)?;
                if den == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                num / den
            }
            Node::Pow(a, k) => {
                let base = a.eval(point)?;
                if base == 0.0 && *k < 0 {
                    return Err(EvalError::DivisionByZero);
                }
                base.powi(*k)
            }
            Node::Neg(a) => -a.eval(point)?,
            Node::Call(func, a) => func.apply(a.eval(point)?),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    /// Renders the expression in the accepted grammar. Coordinates without a
    /// name in `coords` print as `x<index>`.
    pub fn to_source<S: AsRef<str>>(&self, coords: &[S]) -> String {
        let mut out = String::new();
        self.write_source(coords, &mut out);
        out
    }

    fn precedence(&self) -> u8 {
        match self.node() {
            Node::Add(..) | Node::Sub(..) => 1,
            Node::Mul(..) | Node::Div(..) => 2,
            Node::Neg(_) => 3,
            Node::Pow(..) => 4,
            Node::Const(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => 0,
            Node::Const(_) | Node::Var(_) | Node::Call(..) => 5,
        }
    }

    fn write_child<S: AsRef<str>>(&self, coords: &[S], parens: bool, out: &mut String) {
        if parens {
            out.push('(');
            self.write_source(coords, out);
            out.push(')');
        } else {
            self.write_source(coords, out);
        }
    }

    fn write_source<S: AsRef<str>>(&self, coords: &[S], out: &mut String) {
        use std::fmt::Write;
        match self.node() {
            Node::Const(c) => {
                let _ = write!(out, "{c:?}");
            }
            Node::Var(i) => match coords.get(*i) {
                Some(name) => out.push_str(name.as_ref()),
                None => {
                    let _ = write!(out, "x{i}");
                }
            },
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                let (op, prec) = match self.node() {
                    Node::Add(..) => (" + ", 1),
                    Node::Sub(..) => (" - ", 1),
                    Node::Mul(..) => ("*", 2),
                    _ => ("/", 2),
                };
                a.write_child(coords, a.precedence() < prec, out);
                out.push_str(op);
                b.write_child(coords, b.precedence() <= prec, out);
            }
            Node::Neg(a) => {
                out.push('-');
                a.write_child(coords, a.precedence() < 3, out);
            }
            Node::Pow(a, k) => {
                a.write_child(coords, a.precedence() < 5, out);
                let _ = write!(out, "^{k}");
            }
            Node::Call(func, a) => {
                out.push_str(func.name());
                out.push('(');
                a.write_source(coords, out);
                out.push(')');
            }
        }
    }
}

macro_rules! fold_binop {
    ($trait:ident, $method:ident, $fold:ident) => {
        impl std::ops::$trait<ScalarExpr> for ScalarExpr {
            type Output = ScalarExpr;
            fn $method(self, rhs: ScalarExpr) -> ScalarExpr {
                $fold(&self, &rhs)
            }
        }
        impl std::ops::$trait<&ScalarExpr> for ScalarExpr {
            type Output = ScalarExpr;
            fn $method(self, rhs: &ScalarExpr) -> ScalarExpr {
                $fold(&self, rhs)
            }
        }
        impl std::ops::$trait<ScalarExpr> for &ScalarExpr {
            type Output = ScalarExpr;
            fn $method(self, rhs: ScalarExpr) -> ScalarExpr {
                $fold(self, &rhs)
            }
        }
        impl std::ops::$trait<&ScalarExpr> for &ScalarExpr {
            type Output = ScalarExpr;
            fn $method(self, rhs: &ScalarExpr) -> ScalarExpr {
                $fold(self, rhs)
            }
        }
    };
}

fn fold_add(a: &ScalarExpr, b: &ScalarExpr) -> ScalarExpr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => ScalarExpr::constant(x + y),
        (Some(0.0), _) => b.clone(),
        (_, Some(0.0)) => a.clone(),
        _ => ScalarExpr::wrap(Node::Add(a.clone(), b.clone())),
    }
}

fn fold_sub(a: &ScalarExpr, b: &ScalarExpr) -> ScalarExpr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => ScalarExpr::constant(x - y),
        (Some(0.0), _) => -b,
        (_, Some(0.0)) => a.clone(),
        _ => ScalarExpr::wrap(Node::Sub(a.clone(), b.clone())),
    }
}

fn fold_mul(a: &ScalarExpr, b: &ScalarExpr) -> ScalarExpr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => ScalarExpr::constant(x * y),
        (Some(x), _) | (_, Some(x)) if x == 0.0 => ScalarExpr::zero(),
        _ if a.is_one() => b.clone(),
        _ if b.is_one() => a.clone(),
        (Some(-1.0), _) => -b,
        (_, Some(-1.0)) => -a,
        _ => ScalarExpr::wrap(Node::Mul(a.clone(), b.clone())),
    }
}

fn fold_div(a: &ScalarExpr, b: &ScalarExpr) -> ScalarExpr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) if y != 0.0 => ScalarExpr::constant(x / y),
        _ if b.is_one() => a.clone(),
        _ => ScalarExpr::wrap(Node::Div(a.clone(), b.clone())),
    }
}

fold_binop!(Add, add, fold_add);
fold_binop!(Sub, sub, fold_sub);
fold_binop!(Mul, mul, fold_mul);
fold_binop!(Div, div, fold_div);

fn fold_neg(a: &ScalarExpr) -> ScalarExpr {
    match a.node() {
        Node::Const(c) => ScalarExpr::constant(-c),
        Node::Neg(inner) => inner.clone(),
        _ => ScalarExpr::wrap(Node::Neg(a.clone())),
    }
}

impl std::ops::Neg for ScalarExpr {
    type Output = ScalarExpr;
    fn neg(self) -> ScalarExpr {
        fold_neg(&self)
    }
}

impl std::ops::Neg for &ScalarExpr {
    type Output = ScalarExpr;
    fn neg(self) -> ScalarExpr {
        fold_neg(self)
    }
}

impl From<f64> for ScalarExpr {
    fn from(c: f64) -> Self {
        ScalarExpr::constant(c)
    }
}

impl std::iter::Sum for ScalarExpr {
    fn sum<I: Iterator<Item = ScalarExpr>>(iter: I) -> Self {
        iter.fold(ScalarExpr::zero(), |acc, e| acc + e)
    }
}

/// Parses `src`, resolving identifiers against the chart's coordinate names.
pub fn parse<S: AsRef<str>>(src: &str, coords: &[S]) -> Result<ScalarExpr, ParseError> {
    let tokens = tokenize(src)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        coords,
        end: src.len(),
    };
    let e = parser.expr()?;
    match parser.peek() {
        None => Ok(e),
        Some(tok) => Err(ParseError::Syntax {
            offset: tok.offset,
            message: format!("unexpected {}", tok.kind.describe()),
        }),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Number(f64, bool),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Number(v, _) => format!("number {v}"),
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Plus => "`+`".into(),
            TokenKind::Minus => "`-`".into(),
            TokenKind::Star => "`*`".into(),
            TokenKind::Slash => "`/`".into(),
            TokenKind::Caret => "`^`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    offset: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let kind = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => TokenKind::Plus,
            b'-' => TokenKind::Minus,
            b'*' => TokenKind::Star,
            b'/' => TokenKind::Slash,
            b'^' => TokenKind::Caret,
            b'(' => TokenKind::LParen,
            b')' => TokenKind::RParen,
            b'0'..=b'9' | b'.' => {
                let mut integral = true;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    integral &= bytes[i] != b'.';
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        integral = false;
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &src[start..i];
                let v: f64 = text.parse().map_err(|_| ParseError::Syntax {
                    offset: start,
                    message: format!("malformed number `{text}`"),
                })?;
                tokens.push(Token {
                    kind: TokenKind::Number(v, integral),
                    offset: start,
                });
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                tokens.push(Token {
                    kind: TokenKind::Ident(src[start..i].to_string()),
                    offset: start,
                });
                continue;
            }
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        i += 1;
        tokens.push(Token {
            kind,
            offset: start,
        });
    }
    Ok(tokens)
}

struct Parser<'a, S> {
    tokens: Vec<Token>,
    pos: usize,
    coords: &'a [S],
    end: usize,
}

impl<S: AsRef<str>> Parser<'_, S> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn offset_here(&self) -> usize {
        self.peek().map_or(self.end, |t| t.offset)
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek().map(|t| &t.kind) == Some(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> Result<(), ParseError> {
        if self.eat(&kind) {
            Ok(())
        } else {
            let found = self
                .peek()
                .map_or("end of input".to_string(), |t| t.kind.describe());
            Err(ParseError::Syntax {
                offset: self.offset_here(),
                message: format!("expected {what}, found {found}"),
            })
        }
    }

    fn expr(&mut self) -> Result<ScalarExpr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(&TokenKind::Plus) {
                lhs = lhs + self.term()?;
            } else if self.eat(&TokenKind::Minus) {
                lhs = lhs - self.term()?;
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<ScalarExpr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(&TokenKind::Star) {
                lhs = lhs * self.unary()?;
            } else if self.eat(&TokenKind::Slash) {
                lhs = lhs / self.unary()?;
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<ScalarExpr, ParseError> {
        if self.eat(&TokenKind::Minus) {
            Ok(-self.unary()?)
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<ScalarExpr, ParseError> {
        let base = self.atom()?;
        if !self.eat(&TokenKind::Caret) {
            return Ok(base);
        }
        let offset = self.offset_here();
        let negative = self.eat(&TokenKind::Minus);
        let k = match self.next() {
            Some(Token {
                kind: TokenKind::Number(v, _),
                ..
            }) if v.fract() == 0.0 && v <= i32::MAX as f64 => v as i32,
            _ => {
                return Err(ParseError::Syntax {
                    offset,
                    message: "exponent must be an integer literal".into(),
                })
            }
        };
        if self.peek().map(|t| &t.kind) == Some(&TokenKind::Caret) {
            return Err(ParseError::Syntax {
                offset: self.offset_here(),
                message: "chained exponents need parentheses".into(),
            });
        }
        Ok(base.powi(if negative { -k } else { k }))
    }

    fn atom(&mut self) -> Result<ScalarExpr, ParseError> {
        let offset = self.offset_here();
        let Some(tok) = self.next() else {
            return Err(ParseError::Syntax {
                offset,
                message: "unexpected end of input".into(),
            });
        };
        match tok.kind {
            TokenKind::Number(v, _) => Ok(ScalarExpr::constant(v)),
            TokenKind::LParen => {
                let e = self.expr()?;
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(e)
            }
            TokenKind::Ident(name) => {
                if let Some(i) = self.coords.iter().position(|c| c.as_ref() == name) {
                    return Ok(ScalarExpr::var(i));
                }
                let func = match name.as_str() {
                    "sin" => Some(Func::Sin),
                    "cos" => Some(Func::Cos),
                    "exp" => Some(Func::Exp),
                    "pi" => return Ok(ScalarExpr::constant(std::f64::consts::PI)),
                    _ => None,
                };
                match func {
                    Some(func) => {
                        self.expect(TokenKind::LParen, "`(` after function name")?;
                        let arg = self.expr()?;
                        self.expect(TokenKind::RParen, "`)`")?;
                        Ok(ScalarExpr::call(func, &arg))
                    }
                    None => Err(ParseError::UnknownIdentifier {
                        name,
                        offset: tok.offset,
                    }),
                }
            }
            other => Err(ParseError::Syntax {
                offset: tok.offset,
                message: format!("unexpected {}", other.describe()),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const XY: [&str; 2] = ["x", "y"];

    fn p(src: &str) -> ScalarExpr {
        parse(src, &XY).unwrap()
    }

    #[test]
    fn evaluates_sum_of_squares() {
        assert_eq!(p("x^2+y^2").eval(&[1.0, 2.0]).unwrap(), 5.0);
        assert_eq!(p("0").eval(&[3.0, -7.0]).unwrap(), 0.0);
        assert_eq!(p("(x^2+y^2)^2").eval(&[1.0, 1.0]).unwrap(), 4.0);
        assert_eq!(p("4*x/(x^2+y^2)^2").eval(&[1.0, 0.0]).unwrap(), 4.0);
    }

    #[test]
    fn unbalanced_paren_reports_offset() {
        let err = parse("x*(", &XY).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { offset: 3, .. }), "{err:?}");
    }

    #[test]
    fn unknown_identifier() {
        let err = parse("x + w", &XY).unwrap_err();
        assert_eq!(
            err,
            ParseError::UnknownIdentifier {
                name: "w".into(),
                offset: 4
            }
        );
    }

    #[test]
    fn rejects_implicit_multiplication_and_real_exponents() {
        assert!(parse("2x", &XY).is_err());
        assert!(parse("x y", &XY).is_err());
        assert!(parse("x^1.5", &XY).is_err());
        assert!(parse("x^2^3", &XY).is_err());
    }

    #[test]
    fn precedence() {
        assert_eq!(p("-x^2").eval(&[3.0, 0.0]).unwrap(), -9.0);
        assert_eq!(p("2*x^2").eval(&[3.0, 0.0]).unwrap(), 18.0);
        assert_eq!(p("1 - 2 - 3").eval(&[0.0, 0.0]).unwrap(), -4.0);
        assert_eq!(p("8/2/2").eval(&[0.0, 0.0]).unwrap(), 2.0);
        assert_eq!(p("x^-1").eval(&[4.0, 0.0]).unwrap(), 0.25);
        assert_eq!(p("x*-y").eval(&[2.0, 3.0]).unwrap(), -6.0);
        assert!((p("sin(pi/2)").eval(&[0.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pole_is_an_error() {
        let e = parse("1/x", &["x"]).unwrap();
        assert_eq!(e.eval(&[0.0]), Err(EvalError::DivisionByZero));
        let e = parse("x^-2", &["x"]).unwrap();
        assert_eq!(e.eval(&[0.0]), Err(EvalError::DivisionByZero));
        assert!(matches!(
            e.eval(&[]),
            Err(EvalError::CoordinateOutOfRange { index: 0, dim: 0 })
        ));
    }

    #[test]
    fn power_rule_and_independent_variable() {
        let d = p("x^2+y^2").differentiate(0);
        assert_eq!(d, p("2*x"));
        assert!(p("x").differentiate(1).is_zero());
    }

    #[test]
    fn product_with_sine_matches_central_difference() {
        let e = p("x*sin(y)");
        let pt = [2.0, std::f64::consts::FRAC_PI_2];
        let exact = e.differentiate(0).eval(&pt).unwrap();
        let h = 1e-5;
        let fd = (e.eval(&[pt[0] + h, pt[1]]).unwrap() - e.eval(&[pt[0] - h, pt[1]]).unwrap())
            / (2.0 * h);
        assert!((exact - 1.0).abs() < 1e-15);
        assert!((fd - exact).abs() < 1e-9);
    }

    #[test]
    fn quotient_and_chain_rules() {
        let e = p("exp(x*y)/(1 + x^2)");
        let pt = [0.3, -0.7];
        for k in 0..2 {
            let exact = e.differentiate(k).eval(&pt).unwrap();
            let mut hi = pt;
            let mut lo = pt;
            hi[k] += 1e-6;
            lo[k] -= 1e-6;
            let fd = (e.eval(&hi).unwrap() - e.eval(&lo).unwrap()) / 2e-6;
            assert!((fd - exact).abs() < 1e-8, "coord {k}: {fd} vs {exact}");
        }
    }

    #[test]
    fn prints_with_names() {
        assert_eq!(p("x^2 + y^2").to_source(&XY), "x^2 + y^2");
        assert_eq!(p("x - (y - 1)").to_source(&XY), "x - (y - 1.0)");
        assert_eq!(p("(x + y)^3").to_source(&XY), "(x + y)^3");
        assert_eq!(p("x*(-2)").to_source(&XY), "x*(-2.0)");
    }

    fn arb_expr() -> impl Strategy<Value = ScalarExpr> {
        let leaf = prop_oneof![
            (-3i32..=3).prop_map(|c| ScalarExpr::constant(c as f64 * 0.5)),
            (0usize..3).prop_map(ScalarExpr::var),
        ];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
                (inner.clone(), 0i32..4).prop_map(|(a, k)| a.powi(k)),
                inner.clone().prop_map(|a| -a),
                inner.clone().prop_map(|a| a.sin()),
                inner.prop_map(|a| a.cos()),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(e in arb_expr()) {
            let names = ["x", "y", "z"];
            let once = parse(&e.to_source(&names), &names).unwrap();
            prop_assert_eq!(&once, &e);
            let twice = parse(&once.to_source(&names), &names).unwrap();
            prop_assert_eq!(twice, once);
        }

        #[test]
        fn derivative_matches_central_difference(
            e in arb_expr(),
            pt in proptest::array::uniform3(-1.0f64..1.0),
            k in 0usize..3,
        ) {
            let h = 1e-5;
            let mut hi = pt;
            let mut lo = pt;
            hi[k] += h;
            lo[k] -= h;
            let fd = (e.eval(&hi).unwrap() - e.eval(&lo).unwrap()) / (2.0 * h);
            let exact = e.differentiate(k).eval(&pt).unwrap();
            let scale = exact.abs().max(1.0);
            prop_assert!((fd - exact).abs() <= 1e-6 * scale, "{} vs {}", fd, exact);
        }
    }
}
