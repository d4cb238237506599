//! Potentials `V(x)` given as text, with exact symbolic derivatives up to
//! fourth order.

mod ast;
mod diff;
mod parser;

use std::str::FromStr;

pub use ast::{Expr, Func};
pub use diff::derivative;
pub use parser::parse_expr;

use crate::error::{EvalError, ParseError};

/// Default interval searched for the classical well.
pub const DEFAULT_SEARCH_WINDOW: (f64, f64) = (-10.0, 10.0);

/// `V` and its first four derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivs {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
}

impl Derivs {
    pub fn as_array(&self) -> [f64; 5] {
        [self.v, self.d1, self.d2, self.d3, self.d4]
    }

    /// Taylor value of `V(x0 + dx)` from derivatives at `x0`.
    pub fn taylor(&self, dx: f64) -> f64 {
        self.v + self.taylor_increment(dx)
    }

    /// `V(x0 + dx) - V(x0)` to fourth order, without forming `V(x0 + dx)`.
    pub fn taylor_increment(&self, dx: f64) -> f64 {
        dx * (self.d1 + dx * (self.d2 / 2.0 + dx * (self.d3 / 6.0 + dx * self.d4 / 24.0)))
    }
}

/// A parsed potential together with its derivative trees.
///
/// Immutable after construction, so it can be shared freely between threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    source: String,
    ast: Expr,
    derivs: [Expr; 4],
    search_window: Option<(f64, f64)>,
}

impl Potential {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let ast = parse_expr(text)?.simplify();
        Ok(Self::from_expr(text, ast))
    }

    pub fn from_expr(source: impl Into<String>, ast: Expr) -> Self {
        let d1 = derivative(&ast);
        let d2 = derivative(&d1);
        let d3 = derivative(&d2);
        let d4 = derivative(&d3);
        Potential { source: source.into(), ast, derivs: [d1, d2, d3, d4], search_window: None }
    }

    /// Restricts the interval in which the well is looked for.
    pub fn with_search_window(mut self, lo: f64, hi: f64) -> Self {
        self.search_window = Some((lo, hi));
        self
    }

    pub fn search_window(&self) -> (f64, f64) {
        self.search_window.unwrap_or(DEFAULT_SEARCH_WINDOW)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// The tree for the `order`-th derivative (0 is `V` itself).
    pub fn expr(&self, order: usize) -> &Expr {
        match order {
            0 => &self.ast,
            1..=4 => &self.derivs[order - 1],
            _ => panic!("derivatives are available up to fourth order, got {order}"),
        }
    }

    pub fn value(&self, x: f64) -> Result<f64, EvalError> {
        self.ast.eval(x)
    }

    pub fn derivative(&self, order: usize, x: f64) -> Result<f64, EvalError> {
        self.expr(order).eval(x)
    }

    /// `V(x + dx) - V(x)`, accurate even when `dx` is tiny relative to `x`.
    pub fn increment(&self, x: f64, dx: f64) -> Result<f64, EvalError> {
        Ok(self.ast.eval_increment(x, dx)?.1)
    }

    pub fn eval_derivs(&self, x: f64) -> Result<Derivs, EvalError> {
        Ok(Derivs {
            v: self.ast.eval(x)?,
            d1: self.derivs[0].eval(x)?,
            d2: self.derivs[1].eval(x)?,
            d3: self.derivs[2].eval(x)?,
            d4: self.derivs[3].eval(x)?,
        })
    }
}

impl FromStr for Potential {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Potential::parse(s)
    }
}
