//! Bracketed Newton iteration with bisection fallback.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct RootOptions {
    /// Stop once the step (or the bracket) is below `xtol_rel * max(1, |x|)`.
    pub xtol_rel: f64,
    /// Stop once `|f(x)| <= ftol`.
    pub ftol: f64,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        RootOptions { xtol_rel: 1e-14, ftol: 0.0, max_iter: 200 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    /// `|f(x)|` at the returned point.
    pub residual: f64,
    pub iterations: usize,
}

/// Finds a zero of `f` in `[lo, hi]`, where `f` returns `(value, slope)`.
///
/// `f(lo)` and `f(hi)` must differ in sign. The slope only steers the Newton
/// step; an inaccurate slope costs iterations, not correctness.
pub fn safeguarded_newton<F>(mut f: F, lo: f64, hi: f64, opts: &RootOptions) -> Result<Root>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let (fa, _) = f(a)?;
    if fa == 0.0 {
        return Ok(Root { x: a, residual: 0.0, iterations: 0 });
    }
    let (fb, _) = f(b)?;
    if fb == 0.0 {
        return Ok(Root { x: b, residual: 0.0, iterations: 0 });
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NotBracketed { lo: a, hi: b });
    }
    let neg_at_a = fa < 0.0;
    let mut best = if fa.abs() < fb.abs() { (a, fa.abs()) } else { (b, fb.abs()) };

    // Start from the secant point; it is inside the bracket by construction.
    let mut x = a - fa * (b - a) / (fb - fa);
    if !(x > a && x < b) {
        x = 0.5 * (a + b);
    }
    let mut step_old = b - a;
    let mut step = step_old;

    for iter in 1..=opts.max_iter {
        let (fx, dfx) = f(x)?;
        if fx.abs() < best.1 {
            best = (x, fx.abs());
        }
        if fx == 0.0 || fx.abs() <= opts.ftol {
            return Ok(Root { x, residual: fx.abs(), iterations: iter });
        }
        if (fx < 0.0) == neg_at_a {
            a = x;
        } else {
            b = x;
        }
        let tol = opts.xtol_rel * x.abs().max(1.0);
        if b - a <= tol {
            return Ok(Root { x: best.0, residual: best.1, iterations: iter });
        }

        let newton = x - fx / dfx;
        let use_newton =
            dfx.is_finite() && dfx != 0.0 && newton > a && newton < b && (newton - x).abs() < 0.5 * step_old.abs();
        step_old = step;
        let next = if use_newton { newton } else { 0.5 * (a + b) };
        step = next - x;
        if use_newton && step.abs() <= tol {
            let (fn_, _) = f(next)?;
            let (x_out, r_out) = if fn_.abs() <= best.1 { (next, fn_.abs()) } else { best };
            return Ok(Root { x: x_out, residual: r_out, iterations: iter + 1 });
        }
        if next == x {
            return Ok(Root { x: best.0, residual: best.1, iterations: iter });
        }
        x = next;
    }
    Ok(Root { x: best.0, residual: best.1, iterations: opts.max_iter })
}
