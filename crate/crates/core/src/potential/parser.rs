//! Recursive-descent parser for potential expressions.
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := unary (('*' | '/') unary)*
//! unary    := ('-' | '+') unary | power
//! power    := primary ('^' unary)?
//! primary  := number | 'x' | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so
//! `-x^2` is `-(x^2)` and `2^3^2` is `2^9`.

use num_rational::Rational64;

use super::ast::{Expr, Func};
use crate::error::{ParseError, ParseErrorKind};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    offset: usize,
}

const OPERAND: &[&str] = &["number", "x", "function call", "(", "-"];
const OPERATOR: &[&str] = &["+", "-", "*", "/", "^", "end of input"];

fn syntax(offset: usize, msg: impl Into<String>, expected: &[&'static str]) -> ParseError {
    ParseError { offset, kind: ParseErrorKind::Syntax(msg.into()), expected: expected.to_vec() }
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Token { tok, offset: start });
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let value: f64 =
                text.parse().map_err(|_| syntax(start, format!("malformed number `{text}`"), &["number"]))?;
            out.push(Token { tok: Tok::Num(value), offset: start });
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token { tok: Tok::Ident(src[start..i].to_string()), offset: start });
            continue;
        }
        let ch = src[start..].chars().next().unwrap_or('?');
        return Err(syntax(start, format!("unexpected character `{ch}`"), OPERAND));
    }
    out.push(Token { tok: Tok::End, offset: src.len() });
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut terms = vec![self.term()?];
        loop {
            match self.peek().tok {
                Tok::Plus => {
                    self.bump();
                    terms.push(self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    terms.push(Expr::Neg(Box::new(self.term()?)));
                }
                _ => break,
            }
        }
        Ok(if terms.len() == 1 { terms.pop().unwrap() } else { Expr::Sum(terms) })
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut factors = vec![self.unary()?];
        loop {
            match self.peek().tok {
                Tok::Star => {
                    self.bump();
                    factors.push(self.unary()?);
                }
                Tok::Slash => {
                    self.bump();
                    let d = self.unary()?;
                    factors.push(Expr::Pow(Box::new(d), Rational64::from_integer(-1)));
                }
                _ => break,
            }
        }
        Ok(if factors.len() == 1 { factors.pop().unwrap() } else { Expr::Product(factors) })
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().tok {
            Tok::Minus => {
                self.bump();
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Tok::Plus => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.peek().tok != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let at = self.peek().offset;
        if matches!(self.peek().tok, Tok::End | Tok::RParen) {
            return Err(syntax(at, "expected exponent", OPERAND));
        }
        let exponent = self.unary()?;
        Ok(make_power(base, exponent))
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let t = self.bump();
        match t.tok {
            Tok::Num(v) => Ok(Expr::Const(v)),
            Tok::Ident(name) => {
                if self.peek().tok == Tok::LParen {
                    let func = Func::from_name(&name).ok_or_else(|| ParseError {
                        offset: t.offset,
                        kind: ParseErrorKind::UnsupportedFunction(name.clone()),
                        expected: Func::ALL.iter().map(|f| f.name()).collect(),
                    })?;
                    self.bump();
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    Ok(Expr::Call(func, Box::new(arg)))
                } else if name == "x" {
                    Ok(Expr::X)
                } else {
                    Err(ParseError {
                        offset: t.offset,
                        kind: ParseErrorKind::UnknownIdentifier(name),
                        expected: vec!["x"],
                    })
                }
            }
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Tok::End => Err(syntax(t.offset, "unexpected end of input", OPERAND)),
            _ => Err(syntax(t.offset, "expected an operand", OPERAND)),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        let t = self.peek().clone();
        if t.tok == Tok::RParen {
            self.bump();
            Ok(())
        } else {
            Err(syntax(t.offset, "expected `)`", &[")", "+", "-", "*", "/", "^"]))
        }
    }
}

/// Exact value of an integer-built constant expression such as `1/3` or `-(2^3)`.
fn exact_rational(e: &Expr) -> Option<Rational64> {
    const LIMIT: i64 = 1 << 31;
    let bounded = |r: Rational64| (r.numer().abs() < LIMIT && *r.denom() < LIMIT).then_some(r);
    match e {
        Expr::Const(c) if c.fract() == 0.0 && c.abs() < LIMIT as f64 => Some(Rational64::from_integer(*c as i64)),
        Expr::Neg(u) => exact_rational(u).map(|r| -r),
        Expr::Sum(v) => v.iter().try_fold(Rational64::from_integer(0), |acc, t| bounded(acc + exact_rational(t)?)),
        Expr::Product(v) => v.iter().try_fold(Rational64::from_integer(1), |acc, t| bounded(acc * exact_rational(t)?)),
        Expr::Pow(b, r) if r.is_integer() && r.numer().abs() <= 16 => {
            let base = exact_rational(b)?;
            if *base.numer() == 0 && *r.numer() < 0 {
                return None;
            }
            let mut acc = Rational64::from_integer(1);
            for _ in 0..r.numer().abs() {
                acc = bounded(acc * base)?;
            }
            if *r.numer() < 0 {
                acc = acc.recip();
            }
            Some(acc)
        }
        _ => None,
    }
}

/// Best rational with denominator at most 10^6 that reproduces `v` to the last bit or so.
pub(crate) fn approx_rational(v: f64) -> Option<Rational64> {
    if !v.is_finite() || v.abs() > 1e12 {
        return None;
    }
    let (mut p0, mut q0, mut p1, mut q1) = (0i64, 1i64, 1i64, 0i64);
    let mut x = v;
    for _ in 0..40 {
        let a = x.floor();
        if a.abs() > 1e12 {
            break;
        }
        let a = a as i64;
        let (p2, q2) = (a.checked_mul(p1)?.checked_add(p0)?, a.checked_mul(q1)?.checked_add(q0)?);
        if q2 > 1_000_000 {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        if (p1 as f64 / q1 as f64 - v).abs() <= 4.0 * f64::EPSILON * v.abs().max(f64::MIN_POSITIVE) {
            return Some(Rational64::new(p1, q1));
        }
        let frac = x - a as f64;
        if frac == 0.0 {
            break;
        }
        x = 1.0 / frac;
    }
    None
}

/// `base ^ exponent`: constant rational exponents stay as powers, anything else
/// becomes `exp(exponent * log(base))`.
fn make_power(base: Expr, exponent: Expr) -> Expr {
    if !exponent.contains_x() {
        let r = exact_rational(&exponent).or_else(|| exponent.eval(0.0).ok().and_then(approx_rational));
        if let Some(r) = r {
            return Expr::Pow(Box::new(base), r);
        }
    }
    Expr::Call(Func::Exp, Box::new(Expr::Product(vec![exponent, Expr::Call(Func::Log, Box::new(base))])))
}

/// Parses `src` into an unsimplified expression tree.
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    if src.trim().is_empty() {
        return Err(ParseError { offset: 0, kind: ParseErrorKind::Empty, expected: OPERAND.to_vec() });
    }
    let mut p = Parser { tokens: lex(src)?, pos: 0 };
    let e = p.expr()?;
    let t = p.peek();
    if t.tok != Tok::End {
        let msg = match &t.tok {
            Tok::Ident(_) | Tok::Num(_) => "missing operator (implicit multiplication is not supported)",
            Tok::RParen => "unbalanced `)`",
            _ => "unexpected token",
        };
        return Err(syntax(t.offset, msg, OPERATOR));
    }
    Ok(e)
}
