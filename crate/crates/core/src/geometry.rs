//! Classical well at a given energy: turning points and curve-frame data.

use crate::error::{Error, Result};
use crate::potential::{Derivs, Potential};
use crate::quad::WellPoint;
use crate::roots::{safeguarded_newton, RootOptions};

/// Number of scan points used to locate the well.
pub const SCAN_POINTS: usize = 1024;
/// Turning points with `|V'|` below this are refused.
pub const DEGENERACY_THRESHOLD: f64 = 1e-8;

/// A potential sampled once over its search window so that turning points can
/// be located quickly for many energies.
#[derive(Debug, Clone)]
pub struct Well<'p> {
    potential: &'p Potential,
    window: (f64, f64),
    /// Scan grid with the refined minimum inserted, sorted by `x`.
    xs: Vec<f64>,
    vs: Vec<f64>,
    x_min: f64,
    v_min: f64,
}

/// The classically allowed interval `[x_left, x_right]` at energy `E`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WellGeometry {
    pub energy: f64,
    pub x_left: f64,
    pub x_right: f64,
    pub bracket_left: (f64, f64),
    pub bracket_right: (f64, f64),
    /// `|V(x_left) - E|`.
    pub residual_left: f64,
    /// `|V(x_right) - E|`.
    pub residual_right: f64,
    pub left: Derivs,
    pub right: Derivs,
}

impl<'p> Well<'p> {
    pub fn new(potential: &'p Potential) -> Result<Self> {
        let (lo, hi) = potential.search_window();
        Self::with_window(potential, lo, hi)
    }

    pub fn with_window(potential: &'p Potential, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidInput(format!("invalid search window [{lo}, {hi}]")));
        }
        let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
        let mut xs: Vec<f64> = (0..SCAN_POINTS).map(|i| lo + step * i as f64).collect();
        xs[SCAN_POINTS - 1] = hi;
        // Points where V cannot be evaluated count as forbidden.
        let v_at = |x: f64| potential.value(x).unwrap_or(f64::INFINITY);
        let mut vs: Vec<f64> = xs.iter().map(|&x| v_at(x)).collect();

        let i = (0..vs.len()).min_by(|&a, &b| vs[a].total_cmp(&vs[b])).unwrap_or(0);
        if !vs[i].is_finite() {
            return Err(Error::InvalidInput(format!("potential is undefined on [{lo}, {hi}]")));
        }
        if i == 0 || i == SCAN_POINTS - 1 {
            // The lowest point sits on the boundary: no well closes inside the window.
            return Err(Error::NoSignChange { energy: vs[i], lo, hi });
        }
        let (x_min, v_min) = refine_minimum(potential, xs[i - 1], xs[i + 1], (xs[i], vs[i]));
        if x_min != xs[i] {
            let at = xs.partition_point(|&x| x < x_min);
            if xs.get(at) != Some(&x_min) {
                xs.insert(at, x_min);
                vs.insert(at, v_min);
            }
        }
        Ok(Well { potential, window: (lo, hi), xs, vs, x_min, v_min })
    }

    pub fn potential(&self) -> &'p Potential {
        self.potential
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    /// Location and value of the lowest point of `V` in the window.
    pub fn minimum(&self) -> (f64, f64) {
        (self.x_min, self.v_min)
    }

    pub fn geometry(&self, energy: f64) -> Result<WellGeometry> {
        let (lo, hi) = self.window;
        let no_well = || Error::NoSignChange { energy, lo, hi };
        if !energy.is_finite() || energy <= self.v_min {
            return Err(no_well());
        }
        let mut runs: Vec<(usize, usize)> = Vec::new();
        let mut start = None;
        for (i, &v) in self.vs.iter().enumerate() {
            match (v < energy, start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    runs.push((s, i - 1));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            runs.push((s, self.vs.len() - 1));
        }
        match runs.len() {
            0 => return Err(no_well()),
            1 => {}
            count => return Err(Error::MultipleWells { energy, count }),
        }
        let (s, e) = runs[0];
        if s == 0 || e == self.vs.len() - 1 {
            return Err(no_well());
        }
        let bracket_left = (self.xs[s - 1], self.xs[s]);
        let bracket_right = (self.xs[e], self.xs[e + 1]);
        let x_left = self.turning_point(energy, bracket_left)?;
        let x_right = self.turning_point(energy, bracket_right)?;
        let left = self.potential.eval_derivs(x_left)?;
        let right = self.potential.eval_derivs(x_right)?;
        for (x, d, sign) in [(x_left, &left, -1.0), (x_right, &right, 1.0)] {
            if !(sign * d.d1 >= DEGENERACY_THRESHOLD) {
                return Err(Error::DegenerateTurningPoint { x, slope: d.d1.abs() });
            }
        }
        Ok(WellGeometry {
            energy,
            x_left,
            x_right,
            bracket_left,
            bracket_right,
            residual_left: (left.v - energy).abs(),
            residual_right: (right.v - energy).abs(),
            left,
            right,
        })
    }

    fn turning_point(&self, energy: f64, (a, b): (f64, f64)) -> Result<f64> {
        let p = self.potential;
        let opts = RootOptions { xtol_rel: 1e-15, ftol: 0.0, max_iter: 200 };
        let root = safeguarded_newton(
            |x| {
                // Evaluation failures outside the domain read as "far above E".
                match (p.value(x), p.derivative(1, x)) {
                    (Ok(v), Ok(d)) => Ok((v - energy, d)),
                    _ => Ok((f64::INFINITY, f64::NAN)),
                }
            },
            a,
            b,
            &opts,
        )?;
        Ok(root.x)
    }
}

fn refine_minimum(p: &Potential, a: f64, b: f64, best: (f64, f64)) -> (f64, f64) {
    let v = |x: f64| p.value(x).unwrap_or(f64::INFINITY);
    let dv = |x: f64| p.derivative(1, x).unwrap_or(f64::NAN);
    let d2v = |x: f64| p.derivative(2, x).unwrap_or(f64::NAN);
    let (da, db) = (dv(a), dv(b));
    if da < 0.0 && db > 0.0 {
        let opts = RootOptions { xtol_rel: 1e-15, ftol: 0.0, max_iter: 200 };
        if let Ok(root) = safeguarded_newton(|x| Ok((dv(x), d2v(x))), a, b, &opts) {
            let vr = v(root.x);
            if vr <= best.1 {
                return (root.x, vr);
            }
        }
    }
    // Golden-section fallback for minima where V' is unavailable or flat.
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (a, b);
    let (mut c, mut d) = (hi - g * (hi - lo), lo + g * (hi - lo));
    let (mut vc, mut vd) = (v(c), v(d));
    for _ in 0..100 {
        if vc < vd {
            hi = d;
            d = c;
            vd = vc;
            c = hi - g * (hi - lo);
            vc = v(c);
        } else {
            lo = c;
            c = d;
            vc = vd;
            d = lo + g * (hi - lo);
            vd = v(d);
        }
    }
    let (x, vx) = if vc < vd { (c, vc) } else { (d, vd) };
    if vx < best.1 {
        (x, vx)
    } else {
        best
    }
}

/// Turning points of the single well at energy `E` inside `window`.
pub fn find_turning_points(p: &Potential, energy: f64, window: (f64, f64)) -> Result<WellGeometry> {
    Well::with_window(p, window.0, window.1)?.geometry(energy)
}

impl WellGeometry {
    pub fn width(&self) -> f64 {
        self.x_right - self.x_left
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.x_left && x < self.x_right
    }

    /// `E - V` at a quadrature node, measured from the nearer turning point
    /// so that it keeps full relative accuracy up to the walls.
    pub fn gap_at(&self, p: &Potential, pt: WellPoint) -> Result<f64> {
        if pt.from_left <= pt.from_right {
            Ok(-p.increment(self.x_left, pt.from_left)?)
        } else {
            Ok(-p.increment(self.x_right, -pt.from_right)?)
        }
    }

    /// `E - V(x)` for an interior point.
    pub fn gap(&self, p: &Potential, x: f64) -> Result<f64> {
        self.gap_at(p, WellPoint { x, from_left: x - self.x_left, from_right: self.x_right - x })
    }
}

/// Local geometry of the energy curve `ξ² + V(x) = E` over a point `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveFrame {
    pub x: f64,
    pub xi: f64,
    pub alpha: f64,
    /// `ψ'' = 2ξ/α`; `None` where `V'(x) = 0`.
    pub psi2: Option<f64>,
    /// `α' = -ψ''·V''`.
    pub alpha_prime: Option<f64>,
    /// `θ₀ = α'/(2α)`.
    pub theta0: Option<f64>,
}

/// The frame fields that need `V'(x) ≠ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FocalFrame {
    pub psi2: f64,
    pub alpha_prime: f64,
    pub theta0: f64,
}

impl CurveFrame {
    pub fn focal(&self) -> Result<FocalFrame> {
        match (self.psi2, self.alpha_prime, self.theta0) {
            (Some(psi2), Some(alpha_prime), Some(theta0)) => Ok(FocalFrame { psi2, alpha_prime, theta0 }),
            _ => Err(Error::FrameUnavailable { x: self.x }),
        }
    }
}

pub fn curve_frame(p: &Potential, g: &WellGeometry, x: f64) -> Result<CurveFrame> {
    if !(x > g.x_left && x < g.x_right) {
        return Err(Error::OutsideWell { x, lo: g.x_left, hi: g.x_right });
    }
    let d = p.eval_derivs(x)?;
    let xi = g.gap(p, x)?.max(0.0).sqrt();
    let alpha = d.d1;
    let (psi2, alpha_prime, theta0) = if alpha != 0.0 {
        let psi2 = 2.0 * xi / alpha;
        let alpha_prime = -psi2 * d.d2;
        (Some(psi2), Some(alpha_prime), Some(alpha_prime / (2.0 * alpha)))
    } else {
        (None, None, None)
    };
    Ok(CurveFrame { x, xi, alpha, psi2, alpha_prime, theta0 })
}
