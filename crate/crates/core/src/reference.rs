//! Finite-difference eigenvalues of `(hD)² + V` on a truncated interval.
//!
//! The three-point Laplacian with Dirichlet ends gives a symmetric
//! tridiagonal matrix; eigenvalues come from Sturm counts and bisection.

use rayon::prelude::*;
use serde::Serialize;

use crate::bs::{enumerate_levels, lowest_admissible_energy, Order};
use crate::error::{Error, Result};
use crate::geometry::Well;
use crate::potential::Potential;

/// Symmetric tridiagonal discretisation on `N` interior points of `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridHamiltonian {
    pub a: f64,
    pub b: f64,
    pub h: f64,
    pub spacing: f64,
    pub diag: Vec<f64>,
    /// The constant off-diagonal `-h²/Δ²`.
    pub off: f64,
}

pub fn build_grid_hamiltonian(p: &Potential, h: f64, domain: (f64, f64), n: usize) -> Result<GridHamiltonian> {
    let (a, b) = domain;
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidInput(format!("invalid domain [{a}, {b}]")));
    }
    if n == 0 {
        return Err(Error::InvalidInput("grid needs at least one interior point".into()));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidInput(format!("h must be positive and finite, got {h}")));
    }
    let spacing = (b - a) / (n + 1) as f64;
    let kinetic = h * h / (spacing * spacing);
    let diag = (1..=n)
        .into_par_iter()
        .map(|i| Ok(2.0 * kinetic + p.value(grid_point(a, b, spacing, n, i))?))
        .collect::<Result<Vec<f64>>>()?;
    Ok(GridHamiltonian { a, b, h, spacing, diag, off: -kinetic })
}

/// Interior point `i` (1-based), measured from the nearer end so that
/// symmetric domains give exactly mirrored points.
fn grid_point(a: f64, b: f64, spacing: f64, n: usize, i: usize) -> f64 {
    if 2 * i <= n + 1 {
        a + spacing * i as f64
    } else {
        b - spacing * (n + 1 - i) as f64
    }
}

impl GridHamiltonian {
    /// Interior grid size `N`.
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn point(&self, i: usize) -> f64 {
        grid_point(self.a, self.b, self.spacing, self.len(), i + 1)
    }

    /// Interval containing the whole spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let r = if self.len() > 1 { 2.0 * self.off.abs() } else { 0.0 };
        let lo = self.diag.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.diag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo - r, hi + r)
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn sturm_count(&self, x: f64) -> usize {
        let e2 = self.off * self.off;
        let tiny = f64::MIN_POSITIVE.sqrt() * (self.off.abs() + x.abs()).max(1.0);
        let mut count = 0;
        let mut q = 1.0;
        for (i, &d) in self.diag.iter().enumerate() {
            q = if i == 0 { d - x } else { d - x - e2 / q };
            if q == 0.0 {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `j`-th eigenvalue (from 0), bisected to the last representable bit.
    pub fn eigenvalue(&self, j: usize) -> Result<f64> {
        if j >= self.len() {
            return Err(Error::InvalidInput(format!("eigenvalue index {j} exceeds grid size {}", self.len())));
        }
        let (mut lo, mut hi) = self.gershgorin();
        // Keep count(lo) <= j < count(hi).
        hi += f64::EPSILON * hi.abs().max(1.0);
        lo -= f64::EPSILON * lo.abs().max(1.0);
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.sturm_count(mid) > j {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    pub fn eigenvalues(&self, indices: std::ops::Range<usize>) -> Result<Vec<f64>> {
        indices.into_par_iter().map(|j| self.eigenvalue(j)).collect()
    }
}

/// The `k` lowest eigenvalues, ascending.
pub fn lowest_eigenvalues(h: &GridHamiltonian, k: usize) -> Result<Vec<f64>> {
    if k > h.len() {
        return Err(Error::InvalidInput(format!("requested {k} eigenvalues from a grid of size {}", h.len())));
    }
    h.eigenvalues(0..k)
}

/// Richardson combination of second-order estimates on `N` and `2N + 1`
/// interior points, whose spacings differ by exactly a factor of two.
pub fn richardson(coarse: f64, fine: f64) -> f64 {
    (4.0 * fine - coarse) / 3.0
}

/// Dirichlet interval for levels up to `e_max`: widened from the classical
/// well until `V` exceeds `e_max + 10h` at both ends and the tunnelling
/// integral `∫ sqrt(V - e_max) dx` beyond each turning point reaches `35h`.
pub fn suggest_domain(well: &Well<'_>, h: f64, e_max: f64) -> Result<(f64, f64)> {
    let p = well.potential();
    let g = well.geometry(e_max)?;
    let (w_lo, w_hi) = well.window();
    let step = 1e-3 * g.width();
    let walk = |start: f64, dir: f64, limit: f64| -> Result<f64> {
        let mut x = start;
        let mut integral = 0.0;
        let mut prev = 0.0;
        loop {
            let next = x + dir * step;
            if (dir > 0.0 && next > limit) || (dir < 0.0 && next < limit) {
                return Ok(limit);
            }
            let v = p.value(next)?;
            let root = (v - e_max).max(0.0).sqrt();
            integral += 0.5 * (prev + root) * step;
            prev = root;
            x = next;
            if v >= e_max + 10.0 * h && integral >= 35.0 * h {
                return Ok(x);
            }
        }
    };
    let reach = 100.0 * g.width();
    let a = walk(g.x_left, -1.0, (g.x_left - reach).max(w_lo))?;
    let b = walk(g.x_right, 1.0, (g.x_right + reach).min(w_hi))?;
    Ok((a, b))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceOptions {
    /// Interior points of the coarse grid; the fine grid has `2N + 1`.
    pub grid_n: usize,
    pub domain: Option<(f64, f64)>,
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        ReferenceOptions { grid_n: 8000, domain: None }
    }
}

/// Richardson-extrapolated reference eigenvalues for `indices`, with the
/// difference from the fine-grid value as an accuracy estimate.
pub fn reference_eigenvalues(
    p: &Potential,
    h: f64,
    domain: (f64, f64),
    grid_n: usize,
    indices: std::ops::Range<usize>,
) -> Result<Vec<(f64, f64)>> {
    let coarse = build_grid_hamiltonian(p, h, domain, grid_n)?;
    let fine = build_grid_hamiltonian(p, h, domain, 2 * grid_n + 1)?;
    let (ec, ef) = rayon::join(|| coarse.eigenvalues(indices.clone()), || fine.eigenvalues(indices.clone()));
    let (ec, ef) = (ec?, ef?);
    Ok(ec.iter().zip(&ef).map(|(&c, &f)| (richardson(c, f), (f - richardson(c, f)).abs())).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelPair {
    pub n: i64,
    pub bs: f64,
    pub reference: f64,
    /// `|E_BS - E_ref|`.
    pub error: f64,
    /// Estimated error of the extrapolated reference value.
    pub reference_uncertainty: f64,
    pub bs_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub h: f64,
    pub order: Order,
    pub window: (f64, f64),
    pub domain: (f64, f64),
    pub grid_n: usize,
    pub levels: Vec<LevelPair>,
    pub max_error: f64,
    pub mean_error: f64,
    pub bs_count: usize,
    pub reference_count: usize,
    /// `bs_count - reference_count`; nonzero values are a warning.
    pub count_mismatch: i64,
}

pub fn compare_spectra(
    well: &Well<'_>,
    h: f64,
    window: (f64, f64),
    order: Order,
    opts: &ReferenceOptions,
) -> Result<SpectrumReport> {
    let p = well.potential();
    let bs = enumerate_levels(well, window, h, order)?;
    let lo = window.0.max(lowest_admissible_energy(well, order)?);
    let empty = |domain| SpectrumReport {
        h,
        order,
        window,
        domain,
        grid_n: opts.grid_n,
        levels: Vec::new(),
        max_error: 0.0,
        mean_error: 0.0,
        bs_count: 0,
        reference_count: 0,
        count_mismatch: 0,
    };
    let (_, v_min) = well.minimum();
    if !(window.1 > v_min) {
        return Ok(empty(opts.domain.unwrap_or(well.window())));
    }
    let domain = match opts.domain {
        Some(d) => d,
        None => suggest_domain(well, h, window.1)?,
    };
    let fine = build_grid_hamiltonian(p, h, domain, 2 * opts.grid_n + 1)?;
    let below_lo = fine.sturm_count(lo);
    let below_hi = fine.sturm_count(window.1);
    let reference_count = below_hi.saturating_sub(below_lo);
    let count_mismatch = bs.len() as i64 - reference_count as i64;
    if count_mismatch.abs() > 1 {
        return Err(Error::CountMismatch { bs: bs.len(), reference: reference_count });
    }
    if bs.is_empty() {
        return Ok(SpectrumReport { reference_count, count_mismatch, ..empty(domain) });
    }
    let first = bs[0].n as usize;
    let last = bs[bs.len() - 1].n as usize;
    let refs = reference_eigenvalues(p, h, domain, opts.grid_n, first..last + 1)?;
    let levels: Vec<LevelPair> = bs
        .iter()
        .zip(&refs)
        .map(|(l, &(r, unc))| LevelPair {
            n: l.n,
            bs: l.energy,
            reference: r,
            error: (l.energy - r).abs(),
            reference_uncertainty: unc,
            bs_residual: l.residual,
        })
        .collect();
    let max_error = levels.iter().map(|l| l.error).fold(0.0, f64::max);
    let mean_error = levels.iter().map(|l| l.error).sum::<f64>() / levels.len() as f64;
    Ok(SpectrumReport {
        h,
        order,
        window,
        domain,
        grid_n: opts.grid_n,
        levels,
        max_error,
        mean_error,
        bs_count: bs.len(),
        reference_count,
        count_mismatch,
    })
}

/// Least-squares slope of `log(err)` against `log(h)`.
pub fn fit_order(hs: &[f64], errors: &[f64]) -> Result<f64> {
    if hs.len() != errors.len() || hs.len() < 2 {
        return Err(Error::InvalidInput("order fit needs at least two (h, error) pairs".into()));
    }
    if hs.iter().chain(errors).any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidInput("order fit needs positive finite values".into()));
    }
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("order fit needs distinct h values".into()));
    }
    Ok(sxy / sxx)
}
