//! Two-branch WKB states inside the well and their Schrödinger residual.
//!
//! A state anchored at the right turning point is
//! `u = ½ Σ± C₀ e^{±iπ/4} e^{±iφ₊/h} |ξ|^{-1/2} e^{±ihS₂(x)}` with `C₀ = 2^{-1/2}`,
//! `φ₊(x) = -∫_x^{x_E} ξ` and, when the second-order correction is enabled,
//! `S₂(x)` the finite part of `∫_{x_E}^x y₂` for the transport density
//! `y₂ = V''/(8Q^{3/2}) + 5V'²/(32Q^{5/2})`, `Q = E - V`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

use num_complex::Complex64;
use serde::Serialize;

use crate::action::default_s2_step;
use crate::error::{Error, Result};
use crate::geometry::{Well, WellGeometry};
use crate::potential::Potential;
use crate::quad::{QuadRule, WellPoint};

/// Normalisation of each branch.
pub const C0: f64 = FRAC_1_SQRT_2;

/// Default exclusion zone: `ξ_min = XI_MIN_FRACTION · max ξ`.
pub const XI_MIN_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

/// Turning point the phases are measured from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Anchor {
    /// `x_E`, Maslov phase `+π/4` on the `+` branch.
    Right,
    /// `x'_E`, Maslov phase `-π/4` on the `+` branch.
    Left,
}

/// `∫_a^b sqrt(E - V)` with `b` the right turning point, through `y = b - L s²`.
fn momentum_to_right(p: &Potential, g: &WellGeometry, x: f64) -> Result<f64> {
    let len = g.x_right - x;
    QuadRule::default()
        .integrate(
            |s| {
                let from_right = len * s * s;
                let pt = WellPoint { x: g.x_right - from_right, from_left: g.width() - from_right, from_right };
                Ok(g.gap_at(p, pt)?.max(0.0).sqrt() * 2.0 * len * s)
            },
            0.0,
            1.0,
        )
        .map(|e| e.value)
}

fn momentum_from_left(p: &Potential, g: &WellGeometry, x: f64) -> Result<f64> {
    let len = x - g.x_left;
    QuadRule::default()
        .integrate(
            |s| {
                let from_left = len * s * s;
                let pt = WellPoint { x: g.x_left + from_left, from_left, from_right: g.width() - from_left };
                Ok(g.gap_at(p, pt)?.max(0.0).sqrt() * 2.0 * len * s)
            },
            0.0,
            1.0,
        )
        .map(|e| e.value)
}

fn check_inside(g: &WellGeometry, x: f64) -> Result<()> {
    if x >= g.x_left && x <= g.x_right {
        Ok(())
    } else {
        Err(Error::OutsideWell { x, lo: g.x_left, hi: g.x_right })
    }
}

/// `φ±(x) = ∫_{x_E}^x ξ± dy` with `ξ± = ±sqrt(E - V)`.
pub fn wkb_phase(p: &Potential, g: &WellGeometry, x: f64, branch: Branch) -> Result<f64> {
    check_inside(g, x)?;
    if x == g.x_right {
        return Ok(0.0);
    }
    Ok(-branch.sign() * momentum_to_right(p, g, x)?)
}

/// `∫_{x'}^{x_E} V''/sqrt(E - V)` restricted to one side of `x0`.
fn partial_v2(p: &Potential, g: &WellGeometry, x0: f64, anchor: Anchor) -> Result<f64> {
    let (len, from_end) = match anchor {
        Anchor::Right => (g.x_right - x0, true),
        Anchor::Left => (x0 - g.x_left, false),
    };
    QuadRule::default()
        .integrate(
            |s| {
                let d = len * s * s;
                let pt = if from_end {
                    WellPoint { x: g.x_right - d, from_left: g.width() - d, from_right: d }
                } else {
                    WellPoint { x: g.x_left + d, from_left: d, from_right: g.width() - d }
                };
                let q = g.gap_at(p, pt)?;
                // V''·(2Ls)/sqrt(Q); Q ~ V'·L s² near the end keeps this finite.
                Ok(p.derivative(2, pt.x)? * 2.0 * len / (q / (s * s)).sqrt())
            },
            0.0,
            1.0,
        )
        .map(|e| e.value)
}

/// Finite part of `∫_{x_E}^{x0} y₂` (right anchor) or `∫_{x'}^{x0} y₂` (left).
pub fn finite_part_phase(well: &Well<'_>, energy: f64, x0: f64, anchor: Anchor) -> Result<f64> {
    let p = well.potential();
    let g = well.geometry(energy)?;
    if !g.contains(x0) {
        return Err(Error::OutsideWell { x: x0, lo: g.x_left, hi: g.x_right });
    }
    let q0 = energy - p.value(x0)?;
    let mut step = default_s2_step(energy).min(0.25 * q0);
    let f = |e: f64| -> Result<f64> {
        let g = well.geometry(e).map_err(|_| Error::StencilOutsideWell { energy })?;
        if !g.contains(x0) {
            return Err(Error::StencilOutsideWell { energy });
        }
        partial_v2(p, &g, x0, anchor)
    };
    let central = |d: f64| -> Result<f64> { Ok((f(energy + d)? - f(energy - d)?) / (2.0 * d)) };
    let mut coarse = central(step)?;
    let mut previous: Option<f64> = None;
    let mut derivative = None;
    let mut gap = f64::INFINITY;
    for _ in 0..6 {
        step *= 0.5;
        let fine = central(step)?;
        let ex = (4.0 * fine - coarse) / 3.0;
        if let Some(prev) = previous {
            gap = (ex - prev).abs();
            if gap <= 1e-7 * ex.abs().max(1.0) {
                derivative = Some(ex);
                break;
            }
        }
        previous = Some(ex);
        coarse = fine;
    }
    let df = derivative.ok_or(Error::DerivativeUnstable { energy, discrepancy: gap })?;
    let boundary = 5.0 / 48.0 * p.derivative(1, x0)? / q0.powf(1.5);
    Ok(match anchor {
        // FP∫_{x0}^{x_E} y₂ = -(1/24)F' - (5/48)V'(x0)Q^{-3/2}; the phase runs the other way.
        Anchor::Right => df / 24.0 + boundary,
        Anchor::Left => -df / 24.0 + boundary,
    })
}

/// Finite part of `∮ y₂`, split at `x0`; equals `-S₂(E)`.
pub fn loop_finite_part(well: &Well<'_>, energy: f64, x0: f64) -> Result<f64> {
    let right = finite_part_phase(well, energy, x0, Anchor::Right)?;
    let left = finite_part_phase(well, energy, x0, Anchor::Left)?;
    Ok(2.0 * (left - right))
}

fn transport_density(d1: f64, d2: f64, q: f64) -> f64 {
    d2 / (8.0 * q.powf(1.5)) + 5.0 * d1 * d1 / (32.0 * q.powf(2.5))
}

/// Residual of one state at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residual {
    pub x: f64,
    /// `|h²u'' + (E - V)u|` for the full state.
    pub total: f64,
    /// Branch-wise bound, insensitive to where `x` falls in the oscillation.
    pub envelope: f64,
    /// `envelope / (C₀ |ξ|^{-1/2} (E - V))`.
    pub relative: f64,
}

/// A WKB quasi-mode at fixed `E` and `h`.
#[derive(Debug, Clone)]
pub struct WkbState<'w, 'p> {
    well: &'w Well<'p>,
    geometry: WellGeometry,
    energy: f64,
    h: f64,
    anchor: Anchor,
    xi_min: f64,
    /// `(x0, S₂(x0))` when the second-order phase is enabled.
    correction: Option<(f64, f64)>,
}

impl<'w, 'p> WkbState<'w, 'p> {
    pub fn new(well: &'w Well<'p>, energy: f64, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidInput(format!("h must be positive and finite, got {h}")));
        }
        let geometry = well.geometry(energy)?;
        let (_, v_min) = well.minimum();
        Ok(WkbState {
            well,
            geometry,
            energy,
            h,
            anchor: Anchor::Right,
            xi_min: XI_MIN_FRACTION * (energy - v_min).sqrt(),
            correction: None,
        })
    }

    pub fn anchored(mut self, anchor: Anchor) -> Result<Self> {
        self.anchor = anchor;
        if self.correction.is_some() {
            self = self.with_h2_correction(true)?;
        }
        Ok(self)
    }

    pub fn with_xi_min(mut self, xi_min: f64) -> Self {
        self.xi_min = xi_min;
        self
    }

    /// Enables the second-order transport phase `±h S₂(x)`.
    pub fn with_h2_correction(mut self, on: bool) -> Result<Self> {
        self.correction = if on {
            let (x_min, _) = self.well.minimum();
            let x0 = if self.geometry.contains(x_min) {
                x_min
            } else {
                0.5 * (self.geometry.x_left + self.geometry.x_right)
            };
            Some((x0, finite_part_phase(self.well, self.energy, x0, self.anchor)?))
        } else {
            None
        };
        Ok(self)
    }

    pub fn geometry(&self) -> &WellGeometry {
        &self.geometry
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    fn potential(&self) -> &'p Potential {
        self.well.potential()
    }

    fn xi(&self, x: f64) -> Result<f64> {
        Ok(self.geometry.gap(self.potential(), x)?.max(0.0).sqrt())
    }

    fn check_point(&self, x: f64) -> Result<f64> {
        check_inside(&self.geometry, x)?;
        let xi = self.xi(x)?;
        if xi < self.xi_min {
            return Err(Error::TooCloseToTurningPoint { x, xi, xi_min: self.xi_min });
        }
        Ok(xi)
    }

    /// Phase of the `+` branch at `x`, including Maslov and transport terms.
    pub fn phase(&self, x: f64) -> Result<f64> {
        let p = self.potential();
        let g = &self.geometry;
        let leading = match self.anchor {
            Anchor::Right => -momentum_to_right(p, g, x)? / self.h + FRAC_PI_4,
            Anchor::Left => momentum_from_left(p, g, x)? / self.h - FRAC_PI_4,
        };
        let transport = match self.correction {
            Some((x0, s0)) => self.h * (s0 + self.density_integral(x0, x)?),
            None => 0.0,
        };
        Ok(leading + transport)
    }

    fn density_integral(&self, a: f64, b: f64) -> Result<f64> {
        if a == b {
            return Ok(0.0);
        }
        let p = self.potential();
        let e = self.energy;
        Ok(QuadRule::default()
            .integrate(
                |y| {
                    let d = p.eval_derivs(y)?;
                    Ok(transport_density(d.d1, d.d2, e - d.v))
                },
                a,
                b,
            )?
            .value)
    }

    fn momentum_integral(&self, a: f64, b: f64) -> Result<f64> {
        if a == b {
            return Ok(0.0);
        }
        let p = self.potential();
        let e = self.energy;
        Ok(QuadRule::default().integrate(|y| Ok((e - p.value(y)?).sqrt()), a, b)?.value)
    }

    /// The two branch values `(u₊, u₋)`, each without the `½` of the sum.
    pub fn branches(&self, x: f64) -> Result<(Complex64, Complex64)> {
        let xi = self.check_point(x)?;
        let plus = Complex64::from_polar(C0 / xi.sqrt(), self.phase(x)?);
        Ok((plus, plus.conj()))
    }

    pub fn eval(&self, x: f64) -> Result<Complex64> {
        let (a, b) = self.branches(x)?;
        Ok(0.5 * (a + b))
    }

    /// Branch `+` relative to its phase at `x`: `|ξ(y)|^{-1/2} e^{iΔΦ(y)}`.
    fn local_branch(&self, x: f64, y: f64) -> Result<Complex64> {
        let dphi = self.momentum_integral(x, y)? / self.h
            + match self.correction {
                Some(_) => self.h * self.density_integral(x, y)?,
                None => 0.0,
            };
        Ok(Complex64::from_polar(1.0 / self.xi(y)?.sqrt(), dphi))
    }

    /// `|(P - E)u|(x)` from a five-point second difference with spacing `0.01h`.
    pub fn residual(&self, x: f64) -> Result<Residual> {
        let xi = self.check_point(x)?;
        let q = xi * xi;
        let delta = 1e-2 * self.h;
        let h2 = self.h * self.h;
        let r_plus = fd_residual(|y| self.local_branch(x, y), x, delta, h2, q)?;
        let phase = Complex64::from_polar(C0, self.phase(x)?);
        let total = 0.5 * (phase * r_plus + (phase * r_plus).conj());
        let envelope = C0 * r_plus.norm();
        Ok(Residual { x, total: total.norm(), envelope, relative: envelope / (C0 / xi.sqrt() * q) })
    }
}

/// `h²f''(x) + q f(x)` with a five-point second difference of spacing `delta`.
pub fn fd_residual<F>(mut f: F, x: f64, delta: f64, h2: f64, q: f64) -> Result<Complex64>
where
    F: FnMut(f64) -> Result<Complex64>,
{
    let f0 = f(x)?;
    let fm2 = f(x - 2.0 * delta)?;
    let fm1 = f(x - delta)?;
    let fp1 = f(x + delta)?;
    let fp2 = f(x + 2.0 * delta)?;
    let second = (-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * fp1 - fp2) / (12.0 * delta * delta);
    Ok(h2 * second + q * f0)
}

/// `u(x)` for the right-anchored state.
pub fn wkb_eval(well: &Well<'_>, energy: f64, h: f64, x: f64, with_h2_correction: bool) -> Result<Complex64> {
    WkbState::new(well, energy, h)?.with_h2_correction(with_h2_correction)?.eval(x)
}

pub fn residual_estimate(well: &Well<'_>, energy: f64, h: f64, x: f64, with_h2_correction: bool) -> Result<Residual> {
    WkbState::new(well, energy, h)?.with_h2_correction(with_h2_correction)?.residual(x)
}

/// Largest `|u_L ∓ u_R|` over `xs`, relative to `max |u_R|`, for the states
/// anchored at the two turning points, taking the better of the two signs.
pub fn connection_mismatch(well: &Well<'_>, energy: f64, h: f64, xs: &[f64]) -> Result<f64> {
    let right = WkbState::new(well, energy, h)?.with_h2_correction(true)?;
    let left = WkbState::new(well, energy, h)?.anchored(Anchor::Left)?.with_h2_correction(true)?;
    let mut scale: f64 = 0.0;
    let (mut same, mut flipped): (f64, f64) = (0.0, 0.0);
    for &x in xs {
        let (r, l) = (right.eval(x)?.re, left.eval(x)?.re);
        scale = scale.max(r.abs());
        same = same.max((l - r).abs());
        flipped = flipped.max((l + r).abs());
    }
    if scale == 0.0 {
        return Err(Error::InvalidInput("no sample points for the connection check".into()));
    }
    Ok(same.min(flipped) / scale)
}
