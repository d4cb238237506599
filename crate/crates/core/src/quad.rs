//! Adaptive Gauss–Kronrod quadrature, plus the sine-substituted variant used
//! for integrals across a classical well.
//!
//! Across a well `[a, b]` the map `x = m + w sin(θ)` turns an inverse
//! square-root endpoint singularity into a smooth integrand, because the
//! Jacobian `w cos(θ)` equals `sqrt((x - a)(b - x))`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Node/weight table and stopping rules for the adaptive 7/15-point
/// Gauss–Kronrod pair. All weights are positive and all nodes lie strictly
/// inside each panel.
#[derive(Debug, Clone, Copy)]
pub struct QuadRule {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
    /// Results whose error estimate misses `rel_tol` but stays below this are
    /// returned with `converged = false` instead of failing.
    pub accept_rel: f64,
}

impl Default for QuadRule {
    fn default() -> Self {
        QuadRule { rel_tol: 1e-13, abs_tol: 1e-300, max_panels: 400, accept_rel: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
    /// False when the refinement limit was hit before `rel_tol` was met.
    pub converged: bool,
}

/// Location of a quadrature node relative to the ends of a well.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WellPoint {
    pub x: f64,
    pub from_left: f64,
    pub from_right: f64,
}

impl QuadRule {
    pub fn nodes() -> impl Iterator<Item = (f64, f64)> {
        XGK.iter().zip(WGK.iter()).flat_map(|(&x, &w)| {
            let pair = if x == 0.0 { vec![(0.0, w)] } else { vec![(-x, w), (x, w)] };
            pair.into_iter()
        })
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    /// ∫ f over `[a, b]`.
    pub fn integrate<F>(&self, mut f: F, a: f64, b: f64) -> Result<Estimate>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        self.adaptive(&mut f, &[a, b])
    }

    /// ∫ f over `[a, b]`, starting from the given interior break points.
    pub fn integrate_with_breaks<F>(&self, mut f: F, points: &[f64]) -> Result<Estimate>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        self.adaptive(&mut f, points)
    }

    fn adaptive(&self, f: &mut dyn FnMut(f64) -> Result<f64>, points: &[f64]) -> Result<Estimate> {
        self.adaptive_panels(f, points).map(|(e, _)| e)
    }

    fn adaptive_panels(
        &self,
        f: &mut dyn FnMut(f64) -> Result<f64>,
        points: &[f64],
    ) -> Result<(Estimate, Vec<(f64, f64)>)> {
        let mut heap = BinaryHeap::new();
        let mut evaluations = 0;
        let (mut value, mut error, mut floor) = (0.0, 0.0, 0.0);
        for w in points.windows(2) {
            if w[0] == w[1] {
                continue;
            }
            let p = gk15(f, w[0], w[1])?;
            evaluations += 15;
            value += p.value;
            error += p.error;
            floor += p.floor;
            heap.push(p);
        }
        let target = |v: f64| self.abs_tol.max(self.rel_tol * v.abs());
        while error > target(value) && error > 2.0 * floor {
            if heap.len() >= self.max_panels {
                if error <= self.accept_rel * value.abs() {
                    let panels = heap.into_vec().iter().map(|p| (p.a, p.b)).collect();
                    return Ok((Estimate { value, error, evaluations, converged: false }, panels));
                }
                return Err(Error::RefinementLimit { estimate: value, error });
            }
            let worst = heap.pop().expect("at least one panel");
            let mid = 0.5 * (worst.a + worst.b);
            let left = gk15(f, worst.a, mid)?;
            let right = gk15(f, mid, worst.b)?;
            evaluations += 30;
            value += left.value + right.value - worst.value;
            error += left.error + right.error - worst.error;
            floor += left.floor + right.floor - worst.floor;
            heap.push(left);
            heap.push(right);
        }
        // Re-sum to shed the drift from incremental updates.
        let panels = heap.into_vec();
        let value = panels.iter().map(|p| p.value).sum();
        let error = panels.iter().map(|p| p.error).sum();
        let mut bounds: Vec<(f64, f64)> = panels.iter().map(|p| (p.a, p.b)).collect();
        bounds.sort_by(|x, y| x.0.total_cmp(&y.0));
        Ok((Estimate { value, error, evaluations, converged: true }, bounds))
    }

    /// Like `integrate_with_breaks`, also returning the final panels.
    pub fn integrate_partition<F>(&self, mut f: F, points: &[f64]) -> Result<(Estimate, Vec<(f64, f64)>)>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        self.adaptive_panels(&mut f, points)
    }
}

/// Non-adaptive Kronrod sum over fixed panels. The result is a smooth
/// function of any parameter `f` depends on, which keeps finite differences
/// across nearby integrands free of refinement jitter.
pub fn integrate_fixed<F>(mut f: F, panels: &[(f64, f64)]) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut total = 0.0;
    for &(a, b) in panels {
        total += gk15(&mut f, a, b)?.value;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    floor: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15(f: &mut dyn FnMut(f64) -> Result<f64>, a: f64, b: f64) -> Result<Panel> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut eval = |x: f64| -> Result<f64> {
        let v = f(x)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFiniteIntegrand { x })
        }
    };
    let fc = eval(center)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs = kronrod.abs();
    let mut samples = [(0.0, 0.0); 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let (f1, f2) = (eval(center - dx)?, eval(center + dx)?);
        samples[j] = (f1, f2);
        kronrod += WGK[j] * (f1 + f2);
        abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((samples[j].0 - mean).abs() + (samples[j].1 - mean).abs());
    }
    let value = kronrod * half;
    let (abs, asc) = (abs * half.abs(), asc * half.abs());
    let mut error = ((kronrod - gauss) * half).abs();
    if asc != 0.0 && error != 0.0 {
        error = asc * (200.0 * error / asc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * abs;
    if abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(floor);
    }
    Ok(Panel { a, b, value, error, floor })
}

/// ∫ f(x) dx over a well `(lo, hi)` through `x = m + w sin(θ)`.
///
/// `f` may blow up like an inverse square root at either end; the integrand
/// is never sampled at the endpoints themselves. Each node carries its
/// distance to both ends, computed without cancellation, so callers can
/// evaluate `E - V(x)` accurately near the turning points.
pub fn quad_well<F>(rule: &QuadRule, f: F, lo: f64, hi: f64) -> Result<Estimate>
where
    F: FnMut(WellPoint) -> Result<f64>,
{
    quad_well_partition(rule, f, lo, hi).map(|(e, _)| e)
}

/// `quad_well` that also returns the final panels in the angle variable, for
/// reuse with `quad_well_fixed`.
pub fn quad_well_partition<F>(rule: &QuadRule, f: F, lo: f64, hi: f64) -> Result<(Estimate, Vec<(f64, f64)>)>
where
    F: FnMut(WellPoint) -> Result<f64>,
{
    let mapped = sine_map(f, lo, hi)?;
    rule.integrate_partition(mapped, &[-FRAC_PI_2, 0.0, FRAC_PI_2])
}

/// The sine-mapped integral on a fixed set of angle panels.
pub fn quad_well_fixed<F>(f: F, lo: f64, hi: f64, panels: &[(f64, f64)]) -> Result<f64>
where
    F: FnMut(WellPoint) -> Result<f64>,
{
    integrate_fixed(sine_map(f, lo, hi)?, panels)
}

fn sine_map<F>(mut f: F, lo: f64, hi: f64) -> Result<impl FnMut(f64) -> Result<f64>>
where
    F: FnMut(WellPoint) -> Result<f64>,
{
    if !(hi > lo) {
        return Err(Error::InvalidInput(format!("empty well interval [{lo}, {hi}]")));
    }
    let w = 0.5 * (hi - lo);
    Ok(move |theta: f64| -> Result<f64> {
        let s_left = (0.25 * std::f64::consts::PI + 0.5 * theta).sin();
        let s_right = (0.25 * std::f64::consts::PI - 0.5 * theta).sin();
        let from_left = 2.0 * w * s_left * s_left;
        let from_right = 2.0 * w * s_right * s_right;
        let x = if theta < 0.0 { lo + from_left } else { hi - from_right };
        Ok(f(WellPoint { x, from_left, from_right })? * w * theta.cos())
    })
}
