//! Bohr–Sommerfeld quantization: `𝒮_h(E) = 2πnh`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::action::{action_s0, correction_s2, default_s2_step, period_t};
use crate::error::{Error, Result};
use crate::geometry::Well;
use crate::roots::{safeguarded_newton, RootOptions};

/// Number of retained terms in the semiclassical action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(into = "u8")]
pub enum Order {
    /// `S₀ - πh`.
    First,
    /// `S₀ - πh - h²S₂`.
    Second,
}

impl Order {
    pub fn from_int(k: u8) -> Result<Self> {
        match k {
            1 => Ok(Order::First),
            2 => Ok(Order::Second),
            _ => Err(Error::InvalidInput(format!("order must be 1 or 2, got {k}"))),
        }
    }

    pub fn as_int(self) -> u8 {
        match self {
            Order::First => 1,
            Order::Second => 2,
        }
    }
}

impl From<Order> for u8 {
    fn from(o: Order) -> u8 {
        o.as_int()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BsLevel {
    pub n: i64,
    pub energy: f64,
    pub h: f64,
    pub order: Order,
    /// `|𝒮_h(E) - 2πnh|` at the returned energy.
    pub residual: f64,
    pub iterations: usize,
}

fn check_h(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("h must be positive and finite, got {h}")))
    }
}

/// `𝒮_h(E)` together with the period `T(E) = dS₀/dE`.
fn action_and_period(well: &Well<'_>, energy: f64, h: f64, order: Order) -> Result<(f64, f64)> {
    let p = well.potential();
    let g = well.geometry(energy)?;
    let s0 = action_s0(p, &g)?.value;
    let t = period_t(p, &g)?.value;
    let s = match order {
        Order::First => s0 - PI * h,
        Order::Second => s0 - PI * h - h * h * correction_s2(well, energy, None)?.value,
    };
    Ok((s, t))
}

pub fn semiclassical_action(well: &Well<'_>, energy: f64, h: f64, order: Order) -> Result<f64> {
    check_h(h)?;
    Ok(action_and_period(well, energy, h, order)?.0)
}

/// Lowest energy at which `order` can be evaluated: turning points must be
/// non-degenerate there and, at second order, the `S₂` stencil needs room
/// below `E`.
pub fn lowest_admissible_energy(well: &Well<'_>, order: Order) -> Result<f64> {
    let (_, v_min) = well.minimum();
    let scale = v_min.abs().max(1.0);
    let mut offset = match order {
        Order::First => 1e-12 * scale,
        Order::Second => 3.0 * default_s2_step(v_min.abs() + 1e-3 * scale),
    };
    let mut last = None;
    for _ in 0..200 {
        let probe = match order {
            Order::First => v_min + offset,
            Order::Second => v_min + offset / 3.0,
        };
        match well.geometry(probe) {
            Ok(_) => return Ok(v_min + offset),
            Err(e @ (Error::DegenerateTurningPoint { .. } | Error::NoSignChange { .. })) => last = Some(e),
            Err(e) => return Err(e),
        }
        offset *= 2.0;
    }
    Err(last.expect("loop ran"))
}

/// All levels whose quantum number satisfies `2πnh ∈ [𝒮_h(lo), 𝒮_h(hi)]`.
///
/// `lo` is raised to `lowest_admissible_energy` if needed.
pub fn enumerate_levels(well: &Well<'_>, window: (f64, f64), h: f64, order: Order) -> Result<Vec<BsLevel>> {
    check_h(h)?;
    let (lo, hi) = window;
    if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidInput(format!("invalid energy window [{lo}, {hi}]")));
    }
    let lo = lo.max(lowest_admissible_energy(well, order)?);
    if lo >= hi {
        return Ok(Vec::new());
    }
    let two_pi_h = 2.0 * PI * h;
    let s_lo = action_and_period(well, lo, h, order)?.0;
    let s_hi = action_and_period(well, hi, h, order)?.0;
    let n_lo = ((s_lo / two_pi_h).ceil() as i64).max(0);
    let n_hi = (s_hi / two_pi_h).floor() as i64;
    if n_hi < n_lo {
        return Ok(Vec::new());
    }

    let m = 32.max(4 * (n_hi - n_lo + 1) as usize);
    let grid: Vec<f64> = (0..=m).map(|i| if i == m { hi } else { lo + (hi - lo) * i as f64 / m as f64 }).collect();
    let values: Vec<f64> =
        grid.par_iter().map(|&e| Ok(action_and_period(well, e, h, order)?.0)).collect::<Result<_>>()?;
    for i in 0..m {
        if !(values[i + 1] > values[i]) {
            return Err(Error::NonMonotoneAction { lo: grid[i], hi: grid[i + 1] });
        }
    }

    (n_lo..=n_hi)
        .into_par_iter()
        .map(|n| {
            let target = two_pi_h * n as f64;
            let k = values.partition_point(|&s| s < target).clamp(1, m);
            let bracket = (grid[k - 1], grid[k]);
            solve_level(well, n, h, order, bracket)
        })
        .collect()
}

fn solve_level(well: &Well<'_>, n: i64, h: f64, order: Order, (a, b): (f64, f64)) -> Result<BsLevel> {
    let target = 2.0 * PI * n as f64 * h;
    let tol = 1e-12 * target.abs().max(1.0);
    let opts = RootOptions { xtol_rel: 4.0 * f64::EPSILON, ftol: tol, max_iter: 100 };
    let root = safeguarded_newton(
        |e| {
            let (s, t) = action_and_period(well, e, h, order)?;
            Ok((s - target, t))
        },
        a,
        b,
        &opts,
    )?;
    Ok(BsLevel { n, energy: root.x, h, order, residual: root.residual, iterations: root.iterations })
}

/// `D(E; h) = -cos²((S₀ - h²S₂)/(2h))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GramValue {
    pub energy: f64,
    pub h: f64,
    pub value: f64,
    pub argument: f64,
}

fn gram_argument(well: &Well<'_>, energy: f64, h: f64) -> Result<(f64, f64)> {
    let p = well.potential();
    let g = well.geometry(energy)?;
    let s0 = action_s0(p, &g)?.value;
    let s2 = correction_s2(well, energy, None)?.value;
    let t = period_t(p, &g)?.value;
    Ok(((s0 - h * h * s2) / (2.0 * h), t / (2.0 * h)))
}

pub fn gram_determinant(well: &Well<'_>, energy: f64, h: f64) -> Result<GramValue> {
    check_h(h)?;
    let (argument, _) = gram_argument(well, energy, h)?;
    let c = argument.cos();
    Ok(GramValue { energy, h, value: -(c * c), argument })
}

/// `D` sampled on `points` equally spaced energies across `window`.
///
/// The lower end is raised to `lowest_admissible_energy` if needed.
pub fn gram_scan(well: &Well<'_>, window: (f64, f64), h: f64, points: usize) -> Result<Vec<GramValue>> {
    check_h(h)?;
    let window = (window.0.max(lowest_admissible_energy(well, Order::Second)?), window.1);
    if points < 2 || !(window.0 < window.1) {
        return Err(Error::InvalidInput("gram scan needs at least two points and a non-empty window".into()));
    }
    let step = (window.1 - window.0) / (points - 1) as f64;
    (0..points)
        .into_par_iter()
        .map(|i| {
            let e = if i == points - 1 { window.1 } else { window.0 + step * i as f64 };
            gram_determinant(well, e, h)
        })
        .collect()
}

/// Zeros of `D` located from the local minima of `|D|` in a scan and refined
/// by root finding on `cos` of the argument.
pub fn gram_zeros(well: &Well<'_>, scan: &[GramValue]) -> Result<Vec<f64>> {
    let Some(first) = scan.first() else {
        return Ok(Vec::new());
    };
    let h = first.h;
    let cos = |v: &GramValue| v.argument.cos();
    let mut brackets = Vec::new();
    for i in 0..scan.len() {
        let here = scan[i].value.abs();
        let left_ok = i == 0 || scan[i - 1].value.abs() >= here;
        let right_ok = i + 1 == scan.len() || scan[i + 1].value.abs() > here;
        if !(left_ok && right_ok) {
            continue;
        }
        if here == 0.0 {
            brackets.push((scan[i].energy, scan[i].energy));
            continue;
        }
        if i > 0 && cos(&scan[i - 1]) * cos(&scan[i]) < 0.0 {
            brackets.push((scan[i - 1].energy, scan[i].energy));
        } else if i + 1 < scan.len() && cos(&scan[i]) * cos(&scan[i + 1]) < 0.0 {
            brackets.push((scan[i].energy, scan[i + 1].energy));
        }
    }
    brackets.dedup();
    let opts = RootOptions { xtol_rel: 4.0 * f64::EPSILON, ftol: 0.0, max_iter: 100 };
    brackets
        .into_par_iter()
        .map(|(a, b)| {
            if a == b {
                return Ok(a);
            }
            let root = safeguarded_newton(
                |e| {
                    let (arg, darg) = gram_argument(well, e, h)?;
                    Ok((arg.cos(), -arg.sin() * darg))
                },
                a,
                b,
                &opts,
            )?;
            Ok(root.x)
        })
        .collect()
}

/// Consistency of the action-angle description at one energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActionAngleReport {
    pub energy: f64,
    /// `τ(E) = S₀/2π`.
    pub tau: f64,
    /// `f₀(τ(E))`, which must reproduce `E`.
    pub f0: f64,
    /// `f₀'(τ)` by differentiating the numerical inverse.
    pub f0_prime: f64,
    /// `dτ/dE = T/2π`.
    pub dtau_de: f64,
    /// `f₀'(τ)·dτ/dE`, which must equal 1.
    pub inverse_product: f64,
    /// `f₁ = f₀'/2`.
    pub f1: f64,
    /// `-2π f₁/f₀'`.
    pub s1: f64,
}

pub fn action_angle_check(well: &Well<'_>, energy: f64) -> Result<ActionAngleReport> {
    let p = well.potential();
    let g = well.geometry(energy)?;
    let tau_at = |e: f64| -> Result<(f64, f64)> {
        let g = well.geometry(e)?;
        Ok((action_s0(p, &g)?.value / (2.0 * PI), period_t(p, &g)?.value / (2.0 * PI)))
    };
    let tau = action_s0(p, &g)?.value / (2.0 * PI);
    let dtau_de = period_t(p, &g)?.value / (2.0 * PI);
    let (_, v_min) = well.minimum();

    // f₀ = τ⁻¹ by Newton on E ↦ τ(E), bracketed between the well bottom and
    // an energy whose τ exceeds the target.
    let upper = {
        let mut e_hi = energy + (energy - v_min).max(1e-3);
        while tau_at(e_hi)?.0 <= tau * 1.5 {
            e_hi = energy + 2.0 * (e_hi - energy);
        }
        e_hi
    };
    let opts = RootOptions { xtol_rel: 4.0 * f64::EPSILON, ftol: 0.0, max_iter: 100 };
    let f0 = |t: f64| -> Result<f64> {
        let lower = v_min + 1e-12 * (energy - v_min);
        Ok(safeguarded_newton(
            |e| {
                let (tau_e, dt) = tau_at(e)?;
                Ok((tau_e - t, dt))
            },
            lower,
            upper,
            &opts,
        )?
        .x)
    };
    let f0_tau = f0(tau)?;
    let delta = 1e-3 * tau;
    let d1 = (f0(tau + delta)? - f0(tau - delta)?) / (2.0 * delta);
    let d2 = (f0(tau + 0.5 * delta)? - f0(tau - 0.5 * delta)?) / delta;
    let f0_prime = (4.0 * d2 - d1) / 3.0;
    let f1 = 0.5 * f0_prime;
    Ok(ActionAngleReport {
        energy,
        tau,
        f0: f0_tau,
        f0_prime,
        dtau_de,
        inverse_product: f0_prime * dtau_de,
        f1,
        s1: -2.0 * PI * f1 / f0_prime,
    })
}
