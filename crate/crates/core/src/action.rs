//! Loop integrals over the classical orbit and the second-order correction.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Well, WellGeometry};
use crate::potential::{Derivs, Potential};
use crate::quad::{quad_well, quad_well_fixed, quad_well_partition, Estimate, QuadRule, WellPoint};
use crate::roots::{safeguarded_newton, RootOptions};

/// `S₀(E) = 2∫ sqrt(E - V) dx` over the well.
pub fn action_s0(p: &Potential, g: &WellGeometry) -> Result<Estimate> {
    let e = quad_well(&QuadRule::default(), |pt| Ok(g.gap_at(p, pt)?.sqrt()), g.x_left, g.x_right)?;
    Ok(Estimate { value: 2.0 * e.value, error: 2.0 * e.error, ..e })
}

/// `T(E) = ∫ dx / sqrt(E - V)`, equal to `dS₀/dE`.
pub fn period_t(p: &Potential, g: &WellGeometry) -> Result<Estimate> {
    quad_well(&QuadRule::default(), |pt| Ok(1.0 / g.gap_at(p, pt)?.sqrt()), g.x_left, g.x_right)
}

/// `J(E) = ∮ V'' dt = ∫ V''(x) / sqrt(E - V) dx`.
pub fn loop_v2(p: &Potential, g: &WellGeometry) -> Result<Estimate> {
    quad_well(&QuadRule::default(), v2_integrand(p, g), g.x_left, g.x_right)
}

fn v2_integrand<'a>(p: &'a Potential, g: &'a WellGeometry) -> impl FnMut(WellPoint) -> Result<f64> + 'a {
    move |pt| Ok(p.derivative(2, pt.x)? / g.gap_at(p, pt)?.sqrt())
}

/// Result of the finite-difference derivative behind `S₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct S2Estimate {
    pub value: f64,
    /// Step of the finest stencil used.
    pub step: f64,
    /// Difference between the last two extrapolated estimates (in `S₂` units).
    pub discrepancy: f64,
}

/// Initial stencil half-width for `correction_s2` at energy `E`.
pub fn default_s2_step(energy: f64) -> f64 {
    1e-4f64.max(1e-3 * energy.abs())
}

const S2_MAX_HALVINGS: usize = 6;

/// `S₂(E) = (1/12) dJ/dE` by central differences with Richardson extrapolation.
///
/// Extrapolates the central differences at `step` and `step/2` (default
/// `default_s2_step`) and checks the result against the `step/2`, `step/4`
/// pair. If they disagree by more than `1e-6` relative, the step keeps
/// halving until successive extrapolations agree.
pub fn correction_s2(well: &Well<'_>, energy: f64, step: Option<f64>) -> Result<S2Estimate> {
    let p = well.potential();
    let mut step = step.unwrap_or_else(|| default_s2_step(energy));
    if !(step > 0.0) {
        return Err(Error::InvalidInput(format!("finite-difference step must be positive, got {step}")));
    }
    let g0 = well.geometry(energy)?;
    let (j0, panels) = quad_well_partition(&QuadRule::default(), v2_integrand(p, &g0), g0.x_left, g0.x_right)?;
    let j0 = j0.value;
    // Every stencil point uses the same angle panels, so refinement choices
    // cannot leak into the difference quotient.
    let panels: Vec<(f64, f64)> = panels.iter().flat_map(|&(a, b)| [(a, 0.5 * (a + b)), (0.5 * (a + b), b)]).collect();
    let j_at = |e: f64| -> Result<f64> {
        let g = well.geometry(e).map_err(|err| match err {
            Error::NoSignChange { .. } | Error::DegenerateTurningPoint { .. } => Error::StencilOutsideWell { energy },
            other => other,
        })?;
        quad_well_fixed(v2_integrand(p, &g), g.x_left, g.x_right, &panels)
    };
    let central = |d: f64| -> Result<f64> { Ok((j_at(energy + d)? - j_at(energy - d)?) / (2.0 * d)) };

    // Roundoff in J limits how well a near-zero derivative can be resolved.
    let floor = 1e-9 * j0.abs().max(1.0) / step.clamp(1e-4, 1.0);
    let accept = |gap: f64, value: f64| gap <= 1e-6 * value.abs() || gap <= floor;

    // A fixed stencil keeps S₂ a smooth function of E. The value comes from
    // the two widest stencils; the narrowest only checks them, since it
    // carries the most roundoff.
    let d0 = central(step)?;
    let d1 = central(0.5 * step)?;
    let d2 = central(0.25 * step)?;
    let r1 = (4.0 * d1 - d0) / 3.0;
    let r2 = (4.0 * d2 - d1) / 3.0;
    let gap = (r2 - r1).abs();
    if accept(gap, r2) {
        return Ok(S2Estimate { value: r1 / 12.0, step: 0.5 * step, discrepancy: gap / 12.0 });
    }

    step *= 0.25;
    let mut coarse = d2;
    let mut previous = r2;
    let mut last_gap = gap;
    for _ in 0..S2_MAX_HALVINGS {
        step *= 0.5;
        let fine = central(step)?;
        let extrapolated = (4.0 * fine - coarse) / 3.0;
        last_gap = (extrapolated - previous).abs();
        if accept(last_gap, extrapolated) {
            return Ok(S2Estimate { value: extrapolated / 12.0, step, discrepancy: last_gap / 12.0 });
        }
        previous = extrapolated;
        coarse = fine;
    }
    Err(Error::DerivativeUnstable { energy, discrepancy: last_gap / 12.0 })
}

/// Per-energy bundle of the loop integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActionData {
    pub energy: f64,
    pub s0: f64,
    pub t: f64,
    pub j: f64,
    pub s2: f64,
    pub s0_error: f64,
    pub t_error: f64,
    pub j_error: f64,
    pub s2_error: f64,
}

pub fn action_data(well: &Well<'_>, energy: f64) -> Result<ActionData> {
    let p = well.potential();
    let g = well.geometry(energy)?;
    let s0 = action_s0(p, &g)?;
    let t = period_t(p, &g)?;
    let j = loop_v2(p, &g)?;
    let s2 = correction_s2(well, energy, None)?;
    Ok(ActionData {
        energy,
        s0: s0.value,
        t: t.value,
        j: j.value,
        s2: s2.value,
        s0_error: s0.error,
        t_error: t.error,
        j_error: j.error,
        s2_error: s2.discrepancy,
    })
}

/// The transport-equation integrand `T₁` over the point `x`, built from the
/// curve frame. Requires `V'(x) ≠ 0`.
pub fn t1_integrand(p: &Potential, g: &WellGeometry, x: f64) -> Result<f64> {
    let frame = crate::geometry::curve_frame(p, g, x)?;
    let f = frame.focal()?;
    let d = p.eval_derivs(x)?;
    Ok(t1_from(frame.alpha, f.psi2, f.alpha_prime, &d))
}

fn t1_from(alpha: f64, psi2: f64, alpha_prime: f64, d: &Derivs) -> f64 {
    (psi2 * psi2 / 24.0 * d.d4
        + alpha_prime * psi2 / (6.0 * alpha) * d.d3
        + alpha_prime * alpha_prime / (8.0 * alpha * alpha) * d.d2)
        / alpha
}

/// Everything the arc integrands need at `ζ`, where the point sits on the
/// right wall at `V(x) = E - ζ²`.
#[derive(Debug, Clone, Copy)]
struct ArcPoint {
    d: Derivs,
    psi2: f64,
    psi3: f64,
    alpha_prime: f64,
    theta0: f64,
    theta0_prime: f64,
}

impl ArcPoint {
    fn new(zeta: f64, d: Derivs) -> Self {
        let alpha = d.d1;
        let psi2 = 2.0 * zeta / alpha;
        let alpha_prime = -psi2 * d.d2;
        let psi3 = 2.0 / alpha - 2.0 * zeta * alpha_prime / (alpha * alpha);
        let alpha_second = -psi3 * d.d2 + psi2 * psi2 * d.d3;
        let theta0 = alpha_prime / (2.0 * alpha);
        let theta0_prime = alpha_second / (2.0 * alpha) - alpha_prime * alpha_prime / (2.0 * alpha * alpha);
        ArcPoint { d, psi2, psi3, alpha_prime, theta0, theta0_prime }
    }

    fn alpha(&self) -> f64 {
        self.d.d1
    }

    fn t1(&self) -> f64 {
        t1_from(self.alpha(), self.psi2, self.alpha_prime, &self.d)
    }

    fn direct(&self) -> f64 {
        let d = &self.d;
        -(self.psi2 * self.psi2 / 8.0 * d.d4
            + (self.theta0 * self.psi2 / 2.0 - self.psi3 / 6.0) * d.d3
            + 0.5 * (self.theta0 * self.theta0 - self.theta0_prime) * d.d2)
            / self.alpha()
    }

    fn by_parts_boundary(&self) -> f64 {
        let a = self.alpha();
        self.psi2 * self.d.d3 / (6.0 * a) + self.alpha_prime * self.d.d2 / (4.0 * a * a)
    }

    fn g0_integrand(&self) -> f64 {
        let d = &self.d;
        2.0 * (d.d3 * d.d1 - d.d2 * d.d2) / (d.d1 * d.d1) / self.alpha() / 24.0
    }

    fn g0_boundary(&self) -> f64 {
        let a = self.alpha();
        (3.0 * self.psi2 * self.d.d3 / a + 5.0 * self.alpha_prime * self.d.d2 / (a * a)) / 24.0
    }
}

/// The right wall of the well at energy `E`, parametrised by `ζ ∈ [0, ξ_hi]`.
struct RightArc<'a> {
    p: &'a Potential,
    energy: f64,
    x_turn: f64,
    x_far: f64,
}

impl<'a> RightArc<'a> {
    fn new(well: &Well<'a>, g: &WellGeometry, xi_hi: f64) -> Result<Self> {
        let p = well.potential();
        let (x_min, v_min) = well.minimum();
        let inner = g.energy - xi_hi * xi_hi;
        if !(inner > v_min) {
            return Err(Error::ArcCrossesCritical);
        }
        let x_far = well.geometry(inner)?.x_right;
        if x_far <= x_min {
            return Err(Error::ArcCrossesCritical);
        }
        // The wall must be strictly increasing between the two ends.
        const CHECKS: usize = 64;
        for k in 0..=CHECKS {
            let x = x_far + (g.x_right - x_far) * k as f64 / CHECKS as f64;
            if !(p.derivative(1, x)? > crate::geometry::DEGENERACY_THRESHOLD) {
                return Err(Error::ArcCrossesCritical);
            }
        }
        Ok(RightArc { p, energy: g.energy, x_turn: g.x_right, x_far })
    }

    fn point(&self, zeta: f64) -> Result<ArcPoint> {
        let target = self.energy - zeta * zeta;
        let x = if zeta == 0.0 {
            self.x_turn
        } else {
            let p = self.p;
            let root = safeguarded_newton(
                |x| Ok((p.value(x)? - target, p.derivative(1, x)?)),
                self.x_far,
                self.x_turn,
                &RootOptions { xtol_rel: 1e-15, ftol: 0.0, max_iter: 200 },
            );
            match root {
                Ok(r) => r.x,
                Err(Error::NotBracketed { .. }) => {
                    // Endpoint roundoff: ζ is within an ulp of either end.
                    if zeta * zeta < 0.5 * (self.energy - p.value(self.x_far)?) {
                        self.x_turn
                    } else {
                        self.x_far
                    }
                }
                Err(e) => return Err(e),
            }
        };
        Ok(ArcPoint::new(zeta, self.p.eval_derivs(x)?))
    }
}

/// `√2·Im D₁` on the right-wall arc `ζ ∈ [0, ξ_hi]`, computed three ways.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImD1 {
    /// `∫ T₁ dζ` plus the integration-by-parts boundary terms.
    pub by_parts: f64,
    /// Quadrature of the integrand before integration by parts.
    pub direct: f64,
    /// Reduction through the derivative of the first transport coefficient.
    pub transport: f64,
    /// `max` pairwise difference of the three values.
    pub discrepancy: f64,
    /// `∫₀^ξ T₁ dζ` alone.
    pub t1_integral: f64,
}

impl ImD1 {
    pub fn value(&self) -> f64 {
        self.by_parts
    }
}

pub fn im_d1(well: &Well<'_>, energy: f64, xi_hi: f64) -> Result<ImD1> {
    if !(xi_hi >= 0.0) {
        return Err(Error::InvalidInput(format!("arc length must be non-negative, got {xi_hi}")));
    }
    if xi_hi == 0.0 {
        return Ok(ImD1 { by_parts: 0.0, direct: 0.0, transport: 0.0, discrepancy: 0.0, t1_integral: 0.0 });
    }
    let g = well.geometry(energy)?;
    let arc = RightArc::new(well, &g, xi_hi)?;
    let rule = QuadRule::default();
    let t1 = rule.integrate(|z| Ok(arc.point(z)?.t1()), 0.0, xi_hi)?.value;
    let direct = rule.integrate(|z| Ok(arc.point(z)?.direct()), 0.0, xi_hi)?.value;
    let g0 = rule.integrate(|z| Ok(arc.point(z)?.g0_integrand()), 0.0, xi_hi)?.value;
    let end = arc.point(xi_hi)?;
    let by_parts = t1 + end.by_parts_boundary();
    let transport = g0 + end.g0_boundary();
    let discrepancy = (by_parts - direct).abs().max((by_parts - transport).abs()).max((direct - transport).abs());
    Ok(ImD1 { by_parts, direct, transport, discrepancy, t1_integral: t1 })
}

/// `∫₀^{ξ(x)} T₁ dζ` along the right wall up to the point `x`.
pub fn t1_arc_integral(well: &Well<'_>, g: &WellGeometry, x: f64) -> Result<f64> {
    let p = well.potential();
    let (x_min, _) = well.minimum();
    if !(x > x_min) || !(x < g.x_right) {
        return Err(Error::ArcCrossesCritical);
    }
    let xi = g.gap(p, x)?.max(0.0).sqrt();
    let arc = RightArc::new(well, g, xi)?;
    Ok(QuadRule::default().integrate(|z| Ok(arc.point(z)?.t1()), 0.0, xi)?.value)
}
