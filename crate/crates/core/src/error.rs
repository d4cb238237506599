use std::fmt;

use thiserror::Error;

/// Syntax error in a potential expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// Byte offset into the source text.
    pub offset: usize,
    pub kind: ParseErrorKind,
    /// Tokens that would have been accepted at `offset`.
    pub expected: Vec<&'static str>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    UnknownIdentifier(String),
    UnsupportedFunction(String),
    Empty,
}

impl ParseError {
    /// Renders the error with a caret under the offending byte.
    pub fn caret_diagnostic(&self, source: &str) -> String {
        let col = source[..self.offset.min(source.len())].chars().count();
        format!("{source}\n{}^\n{self}", " ".repeat(col))
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ParseErrorKind::Syntax(msg) => write!(f, "syntax error at offset {}: {msg}", self.offset)?,
            ParseErrorKind::UnknownIdentifier(id) => write!(f, "unknown identifier `{id}` at offset {}", self.offset)?,
            ParseErrorKind::UnsupportedFunction(id) => {
                write!(f, "unsupported function `{id}` at offset {}", self.offset)?
            }
            ParseErrorKind::Empty => write!(f, "empty expression")?,
        }
        if !self.expected.is_empty() {
            write!(f, " (expected one of: {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

/// Failure to evaluate an expression at a point.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("{func} is undefined at argument {arg}")]
    Domain { func: &'static str, arg: f64 },
    #[error("non-finite value at x = {x}")]
    NonFinite { x: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),

    #[error("no closed well at energy {energy} inside [{lo}, {hi}]")]
    NoSignChange { energy: f64, lo: f64, hi: f64 },
    #[error("{count} separate wells at energy {energy}; a single well is required")]
    MultipleWells { energy: f64, count: usize },
    #[error("degenerate turning point at x = {x} (|V'| = {slope:e})")]
    DegenerateTurningPoint { x: f64, slope: f64 },
    #[error("x = {x} lies outside the well [{lo}, {hi}]")]
    OutsideWell { x: f64, lo: f64, hi: f64 },
    #[error("curve frame unavailable at x = {x}: V'(x) = 0")]
    FrameUnavailable { x: f64 },
    #[error("arc from the turning point crosses a critical point of V")]
    ArcCrossesCritical,
    #[error("x = {x} is within the turning-point exclusion zone (xi = {xi} < {xi_min})")]
    TooCloseToTurningPoint { x: f64, xi: f64, xi_min: f64 },
    #[error("well disappears within the stencil around E = {energy}")]
    StencilOutsideWell { energy: f64 },

    #[error("non-finite integrand at x = {x}")]
    NonFiniteIntegrand { x: f64 },
    #[error("quadrature refinement limit reached (estimate {estimate}, error {error:e})")]
    RefinementLimit { estimate: f64, error: f64 },
    #[error("finite-difference derivative did not settle at E = {energy} (last discrepancy {discrepancy:e})")]
    DerivativeUnstable { energy: f64, discrepancy: f64 },

    #[error("semiclassical action is not increasing between E = {lo} and E = {hi}")]
    NonMonotoneAction { lo: f64, hi: f64 },
    #[error("root not bracketed on [{lo}, {hi}]")]
    NotBracketed { lo: f64, hi: f64 },
    #[error("level count mismatch: {bs} semiclassical vs {reference} reference")]
    CountMismatch { bs: usize, reference: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Failures tied to the shape of the classical well rather than to the numerics.
    pub fn is_geometry(&self) -> bool {
        matches!(
            self,
            Error::NoSignChange { .. }
                | Error::MultipleWells { .. }
                | Error::DegenerateTurningPoint { .. }
                | Error::OutsideWell { .. }
                | Error::FrameUnavailable { .. }
                | Error::ArcCrossesCritical
                | Error::TooCloseToTurningPoint { .. }
                | Error::StencilOutsideWell { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
