//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Run with `cargo test -p bsquant --test acceptance`. Extra measurements are
//! printed as INFO lines and never affect the outcome.

mod suite;

use std::process::ExitCode;
use std::time::Instant;

use bsquant::{
    action_s0, build_grid_hamiltonian, compare_spectra, connection_mismatch, correction_s2, enumerate_levels,
    fit_order, gram_determinant, gram_scan, gram_zeros, im_d1, loop_finite_part, loop_v2, lowest_eigenvalues, period_t,
    reference_eigenvalues, residual_estimate, richardson, suggest_domain, Order, Potential, ReferenceOptions, Result,
    Well,
};

type Outcome = Result<(bool, String)>;

struct Report {
    failures: usize,
}

impl Report {
    fn run(&mut self, id: &str, name: &str, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let (ok, detail) = match f() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            self.failures += 1;
        }
        let tag = if ok { "PASS" } else { "FAIL" };
        println!("{tag} [{id}] {name}: {detail} ({:.2} s)", start.elapsed().as_secs_f64());
    }
}

fn info(msg: impl AsRef<str>) {
    println!("INFO {}", msg.as_ref());
}

fn pot(src: &str) -> Potential {
    Potential::parse(src).expect("acceptance potentials parse")
}

fn harmonic_exactness() -> Outcome {
    let start = Instant::now();
    let p = pot("x^2");
    let well = Well::new(&p)?;
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for h in [0.1, 0.05, 0.01] {
        for l in enumerate_levels(&well, (0.0, 2.0), h, Order::Second)? {
            worst = worst.max((l.energy - h * (2 * l.n + 1) as f64).abs());
            count += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    Ok((
        worst <= 1e-10 && elapsed < 1.0 && count > 0,
        format!("{count} levels, max |E - h(2n+1)| = {worst:.2e}, {elapsed:.3} s"),
    ))
}

const SWEEP: [f64; 4] = [0.2, 0.1, 0.05, 0.025];
const COARSE_N: usize = 16000;

/// Order-2 error of the level nearest `target` for each `h` in the sweep.
fn errors_near(p: &Potential, target: f64) -> Result<Vec<f64>> {
    let well = Well::new(p)?;
    let mut errs = Vec::new();
    for h in SWEEP {
        let levels = enumerate_levels(&well, (0.0, 2.0 * target), h, Order::Second)?;
        let level = levels
            .iter()
            .min_by(|a, b| (a.energy - target).abs().total_cmp(&(b.energy - target).abs()))
            .ok_or_else(|| bsquant::Error::InvalidInput("no level in window".into()))?;
        let domain = suggest_domain(&well, h, 2.0 * target)?;
        let n = level.n as usize;
        let (reference, _) = reference_eigenvalues(p, h, domain, COARSE_N, n..n + 1)?[0];
        errs.push((level.energy - reference).abs());
    }
    Ok(errs)
}

fn ground_errors(p: &Potential) -> Result<Vec<f64>> {
    let well = Well::new(p)?;
    let mut errs = Vec::new();
    for h in SWEEP {
        let levels = enumerate_levels(&well, (0.0, 1.0), h, Order::Second)?;
        let domain = suggest_domain(&well, h, 1.0)?;
        let (reference, _) = reference_eigenvalues(p, h, domain, COARSE_N, 0..1)?[0];
        errs.push((levels[0].energy - reference).abs());
    }
    Ok(errs)
}

fn fmt_errs(errs: &[f64]) -> String {
    errs.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(", ")
}

fn order_two_convergence() -> Outcome {
    let start = Instant::now();
    let quartic = pot("x^4");
    let mixed = pot("x^2 + 0.5*x^4");
    let quartic_errs = errors_near(&quartic, 1.0)?;
    let quartic_order = fit_order(&SWEEP, &quartic_errs)?;
    let mixed_errs = ground_errors(&mixed)?;
    let mixed_order = fit_order(&SWEEP, &mixed_errs)?;
    let quartic_ground = fit_order(&SWEEP, &ground_errors(&quartic)?)?;
    info(format!("x^4 ground state: error order {quartic_ground:.3} (E0 scales as h^(4/3))"));
    let elapsed = start.elapsed().as_secs_f64();
    let ok = quartic_order >= 3.0 && mixed_order >= 3.0 && elapsed < 60.0;
    Ok((
        ok,
        format!(
            "x^4 near E = 1: order {quartic_order:.3} [{}]; x^2 + 0.5x^4 ground: order {mixed_order:.3} [{}]",
            fmt_errs(&quartic_errs),
            fmt_errs(&mixed_errs)
        ),
    ))
}

fn order_two_beats_order_one() -> Outcome {
    let opts = ReferenceOptions { grid_n: COARSE_N, domain: None };
    let mut lines = Vec::new();
    let mut ok = true;
    for src in ["x^4", "x^2 + 0.5*x^4"] {
        let p = pot(src);
        let well = Well::new(&p)?;
        for h in SWEEP {
            let first = compare_spectra(&well, h, (0.0, 2.0), Order::First, &opts)?;
            let second = compare_spectra(&well, h, (0.0, 2.0), Order::Second, &opts)?;
            ok &= second.max_error < first.max_error && !second.levels.is_empty();
            lines.push(format!("{src} h={h}: {:.1e} < {:.1e}", second.max_error, first.max_error));
        }
    }
    Ok((ok, lines.join("; ")))
}

fn gram_equivalence() -> Outcome {
    let p = pot("x^2 + 0.5*x^4");
    let well = Well::new(&p)?;
    let h = 0.05;
    let window = (0.0, 2.0);
    let levels = enumerate_levels(&well, window, h, Order::Second)?;
    let at_roots = levels.iter().map(|l| gram_determinant(&well, l.energy, h).map(|d| d.value.abs()));
    let worst_d = at_roots.collect::<Result<Vec<_>>>()?.into_iter().fold(0.0, f64::max);
    let scan = gram_scan(&well, window, h, 10_000)?;
    let zeros = gram_zeros(&well, &scan)?;
    let worst_gap = zeros
        .iter()
        .map(|z| levels.iter().map(|l| (l.energy - z).abs()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    let ok = worst_d <= 1e-10 && worst_gap <= 1e-9 && zeros.len() == levels.len();
    Ok((
        ok,
        format!(
            "{} roots, max |D(E_n)| = {worst_d:.2e}; {} grid zeros, max distance {worst_gap:.2e}",
            levels.len(),
            zeros.len()
        ),
    ))
}

fn homology_identity() -> Outcome {
    let cases = [
        ("x^2 + 0.1*x^4", 1.0, 0.3, -0.089_299_785_374_888_553),
        ("exp(-x)*(exp(-x) - 2)", -0.5, 0.4, -0.320_508_715_002_334_476),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (src, e, xi, oracle) in cases {
        let p = pot(src);
        let well = Well::new(&p)?;
        let r = im_d1(&well, e, xi)?;
        let gap = (r.direct - r.by_parts).abs();
        ok &= gap <= 1e-8;
        parts.push(format!("{src}: |direct - by parts| = {gap:.1e}"));
        info(format!(
            "{src}: sqrt2 Im D1 = {:.15} (oracle {oracle:.15}), transport form within {:.1e}",
            r.value(),
            r.discrepancy
        ));
    }
    let quartic = pot("x^4");
    let well = Well::new(&quartic)?;
    let s2 = correction_s2(&well, 1.0, None)?.value;
    let s2_gap = (s2 - 0.29954).abs();
    ok &= s2_gap <= 1e-5;
    parts.push(format!("S2(x^4, 1) = {s2:.8} (|. - 0.29954| = {s2_gap:.1e})"));
    info(format!("S2(x^4, 1) against 0.299535058683898047: {:.1e}", (s2 - 0.299_535_058_683_898_047).abs()));
    for src in ["x^4", "x^2 + 0.5*x^4"] {
        let p = pot(src);
        let well = Well::new(&p)?;
        let s2 = correction_s2(&well, 1.0, None)?.value;
        let fp = loop_finite_part(&well, 1.0, 0.2)?;
        info(format!("{src}: finite part of the transport loop + S2 = {:.1e}", fp + s2));
    }
    Ok((ok, parts.join("; ")))
}

fn stokes_period() -> Outcome {
    let cases =
        [("x^2", 0.05, 3.0), ("x^4", 0.05, 3.0), ("x^2 + 0.5*x^4", 0.05, 3.0), ("exp(-x)*(exp(-x) - 2)", -0.95, -0.05)];
    let mut ok = true;
    let mut parts = Vec::new();
    for (src, lo, hi) in cases {
        let p = pot(src);
        let well = Well::new(&p)?;
        let s0 = |e: f64| -> Result<f64> { Ok(action_s0(&p, &well.geometry(e)?)?.value) };
        let mut worst: f64 = 0.0;
        for i in 0..50 {
            let e = lo + (hi - lo) * i as f64 / 49.0;
            let t = period_t(&p, &well.geometry(e)?)?.value;
            let d = 1e-3 * (e - well.minimum().1);
            let coarse = (s0(e + d)? - s0(e - d)?) / (2.0 * d);
            let fine = (s0(e + 0.5 * d)? - s0(e - 0.5 * d)?) / d;
            let slope = richardson(coarse, fine);
            worst = worst.max((t - slope).abs() / t);
        }
        ok &= worst <= 1e-6;
        parts.push(format!("{src}: {worst:.1e}"));
    }
    Ok((ok, format!("max |T - dS0/dE|/T over 50 energies: {}", parts.join(", "))))
}

fn wkb_residual_order() -> Outcome {
    let hs = [0.04, 0.02, 0.01];
    let cases = [("x^2", [-0.5, 0.1, 0.6]), ("x^2 + 0.5*x^4", [-0.4, 0.2, 0.55])];
    let mut ok = true;
    let mut parts = Vec::new();
    for (src, xs) in cases {
        let p = pot(src);
        let well = Well::new(&p)?;
        for x in xs {
            let res = hs.iter().map(|&h| residual_estimate(&well, 1.0, h, x, true).map(|r| r.envelope));
            let res = res.collect::<Result<Vec<_>>>()?;
            let order = fit_order(&hs, &res)?;
            ok &= order >= 2.0;
            parts.push(format!("{src} x={x}: {order:.2}"));
        }
    }
    // At reference eigenvalues the left- and right-anchored states must agree.
    let p = pot("x^2 + 0.5*x^4");
    let well = Well::new(&p)?;
    let mut mismatches = Vec::new();
    let hs_conn = [0.1, 0.05, 0.025];
    for h in hs_conn {
        let domain = suggest_domain(&well, h, 1.0)?;
        let levels = enumerate_levels(&well, (0.0, 1.0), h, Order::Second)?;
        let n = levels.len() / 2;
        let (e, _) = reference_eigenvalues(&p, h, domain, COARSE_N, n..n + 1)?[0];
        mismatches.push(connection_mismatch(&well, e, h, &[-0.2, 0.0, 0.3])?);
    }
    info(format!(
        "connection mismatch at reference eigenvalues [{}], order {:.2}",
        fmt_errs(&mismatches),
        fit_order(&hs_conn, &mismatches)?
    ));
    Ok((ok, format!("fitted residual orders: {}", parts.join(", "))))
}

fn oracle_integrity() -> Outcome {
    let p = pot("x^2");
    let n = 4000;
    let coarse = build_grid_hamiltonian(&p, 1.0, (-10.0, 10.0), n)?;
    let fine = build_grid_hamiltonian(&p, 1.0, (-10.0, 10.0), 2 * n + 1)?;
    let raw = lowest_eigenvalues(&coarse, 3)?;
    let raw_fine = lowest_eigenvalues(&fine, 3)?;
    let mut worst: f64 = 0.0;
    let mut consistent = true;
    for (j, (&c, &f)) in raw.iter().zip(&raw_fine).enumerate() {
        worst = worst.max((richardson(c, f) - (2 * j + 1) as f64).abs());
        let eps = 1e-9 * c;
        consistent &= coarse.sturm_count(c - eps) == j && coarse.sturm_count(c + eps) == j + 1;
        consistent &= fine.sturm_count(f - eps) == j && fine.sturm_count(f + eps) == j + 1;
    }
    let raw_worst = raw.iter().enumerate().map(|(j, &c)| (c - (2 * j + 1) as f64).abs()).fold(0.0, f64::max);
    info(format!("x^2, h = 1, N = {n}: raw grid eigenvalues within {raw_worst:.2e} of 1, 3, 5"));
    Ok((
        worst <= 1e-5 && consistent,
        format!("extrapolated {{1, 3, 5}} within {worst:.2e}; Sturm counts consistent: {consistent}"),
    ))
}

/// `∫₀^T V''(x(t)) dt` along `ẋ = 2ξ, ξ̇ = -V'(x)` by RK4, which equals the
/// loop integral `∫ V'' Q^{-1/2} dx` without any endpoint singularity.
fn ode_loop_v2(p: &Potential, x_right: f64, dt: f64) -> Result<f64> {
    let rhs = |s: [f64; 3]| -> Result<[f64; 3]> { Ok([2.0 * s[1], -p.derivative(1, s[0])?, p.derivative(2, s[0])?]) };
    let step = |s: [f64; 3], h: f64| -> Result<[f64; 3]> {
        let add = |a: [f64; 3], b: [f64; 3], c: f64| [a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2]];
        let k1 = rhs(s)?;
        let k2 = rhs(add(s, k1, 0.5 * h))?;
        let k3 = rhs(add(s, k2, 0.5 * h))?;
        let k4 = rhs(add(s, k3, h))?;
        Ok(std::array::from_fn(|i| s[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])))
    };
    // Half orbit from the right wall until ξ returns to zero at the left wall.
    let mut s = [x_right, 0.0, 0.0];
    let mut next = step(s, dt)?;
    while next[1] < 0.0 {
        s = next;
        next = step(s, dt)?;
    }
    let (mut lo, mut hi) = (0.0, dt);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if step(s, mid)?[1] < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(2.0 * step(s, 0.5 * (lo + hi))?[2])
}

fn ode_oracle() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (src, e) in [("x^4", 1.0), ("x^2 + 0.5*x^4", 0.7), ("exp(-x)*(exp(-x) - 2)", -0.3)] {
        let p = pot(src);
        let well = Well::new(&p)?;
        let g = well.geometry(e)?;
        let j = loop_v2(&p, &g)?.value;
        let ode = ode_loop_v2(&p, g.x_right, 1e-4)?;
        let rel = (j - ode).abs() / j.abs();
        ok &= rel <= 1e-6;
        parts.push(format!("{src}: {rel:.1e}"));
    }
    Ok((ok, format!("quadrature J vs RK4 orbit integral: {}", parts.join(", "))))
}

fn property_suites() -> Outcome {
    let mut failed = Vec::new();
    for (name, check) in suite::ALL {
        if let Err(e) = check(suite::CASES) {
            failed.push(format!("{name}: {e}"));
        }
    }
    let total = suite::ALL.len();
    if failed.is_empty() {
        Ok((true, format!("{total} suites x {} cases, no failures", suite::CASES)))
    } else {
        Ok((false, failed.join("; ")))
    }
}

fn main() -> ExitCode {
    let mut report = Report { failures: 0 };
    report.run("1", "harmonic exactness", harmonic_exactness);
    report.run("2", "order-2 convergence", order_two_convergence);
    report.run("3", "order 2 beats order 1", order_two_beats_order_one);
    report.run("4", "Gram determinant zeros", gram_equivalence);
    report.run("5", "homology identity", homology_identity);
    report.run("6", "Stokes / period", stokes_period);
    report.run("7", "WKB residual order", wkb_residual_order);
    report.run("8", "oracle integrity", oracle_integrity);
    report.run("9", "property suites", property_suites);
    report.run("J", "orbit oracle for the V'' loop integral", ode_oracle);
    if report.failures == 0 {
        println!("all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("{} criteria failed", report.failures);
        ExitCode::FAILURE
    }
}
