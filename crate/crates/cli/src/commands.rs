use bsquant::{
    action_data, compare_spectra, enumerate_levels, fit_order, gram_scan, gram_zeros, lowest_admissible_energy,
    residual_estimate, Order, Potential, ReferenceOptions, Well,
};

use crate::config::{Command, RunConfig};
use crate::error::CliError;
use crate::report::{Cell, Report};

pub fn run(cfg: &RunConfig) -> Result<Report, CliError> {
    let potential = Potential::parse(&cfg.potential)
        .map_err(|error| CliError::Potential { source_text: cfg.potential.clone(), error })?;
    let well = match cfg.search {
        Some((lo, hi)) => Well::with_window(&potential, lo, hi)?,
        None => Well::new(&potential)?,
    };
    match cfg.command {
        Command::Spectrum => spectrum(cfg, &well),
        Command::Compare => compare(cfg, &well),
        Command::Action => action(cfg, &well),
        Command::Gram => gram(cfg, &well),
        Command::WkbResidual => wkb_residual(cfg, &well),
    }
}

fn window(cfg: &RunConfig) -> (f64, f64) {
    cfg.window.expect("window validated for this command")
}

fn spectrum(cfg: &RunConfig, well: &Well<'_>) -> Result<Report, CliError> {
    let mut report = Report::new(&["n", "E", "h", "order", "residual", "iterations"]);
    for &h in &cfg.hs {
        for l in enumerate_levels(well, window(cfg), h, cfg.order)? {
            report.push(vec![
                l.n.into(),
                l.energy.into(),
                h.into(),
                Cell::Int(l.order.as_int() as i64),
                l.residual.into(),
                l.iterations.into(),
            ]);
        }
    }
    report.set("levels", report.rows.len());
    Ok(report)
}

fn compare(cfg: &RunConfig, well: &Well<'_>) -> Result<Report, CliError> {
    let opts = ReferenceOptions { grid_n: cfg.grid_n, domain: cfg.domain };
    let mut reports = Vec::new();
    for &h in &cfg.hs {
        reports.push(compare_spectra(well, h, window(cfg), cfg.order, &opts)?);
    }
    let mut warnings = Vec::new();
    for r in &reports {
        if r.count_mismatch != 0 {
            warnings.push(format!(
                "h = {}: {} semiclassical levels vs {} reference eigenvalues in the window",
                r.h, r.bs_count, r.reference_count
            ));
        }
    }

    let mut report = if cfg.sweep {
        let mut report = Report::new(&[
            "h",
            "max_error",
            "mean_error",
            "levels",
            "bs_count",
            "reference_count",
            "count_mismatch",
            "domain_lo",
            "domain_hi",
        ]);
        for r in &reports {
            report.push(vec![
                r.h.into(),
                r.max_error.into(),
                r.mean_error.into(),
                r.levels.len().into(),
                r.bs_count.into(),
                r.reference_count.into(),
                r.count_mismatch.into(),
                r.domain.0.into(),
                r.domain.1.into(),
            ]);
        }
        let (hs, errs): (Vec<f64>, Vec<f64>) =
            reports.iter().filter(|r| r.max_error > 0.0).map(|r| (r.h, r.max_error)).unzip();
        if hs.len() >= 2 {
            report.set("fitted_order", fit_order(&hs, &errs)?);
        }
        report
    } else {
        let r = &reports[0];
        let mut report = Report::new(&["n", "E_bs", "E_ref", "error", "reference_uncertainty", "bs_residual"]);
        for l in &r.levels {
            report.push(vec![
                l.n.into(),
                l.bs.into(),
                l.reference.into(),
                l.error.into(),
                l.reference_uncertainty.into(),
                l.bs_residual.into(),
            ]);
        }
        report.set("h", r.h);
        report.set("domain_lo", r.domain.0);
        report.set("domain_hi", r.domain.1);
        report.set("max_error", r.max_error);
        report.set("mean_error", r.mean_error);
        report.set("bs_count", r.bs_count);
        report.set("reference_count", r.reference_count);
        report.set("count_mismatch", r.count_mismatch);
        report
    };
    report.warnings = warnings;
    Ok(report)
}

fn energy_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points).map(|i| if i + 1 == points { hi } else { lo + (hi - lo) * i as f64 / (points - 1) as f64 }).collect()
}

fn action(cfg: &RunConfig, well: &Well<'_>) -> Result<Report, CliError> {
    let (lo, hi) = window(cfg);
    let lo = lo.max(lowest_admissible_energy(well, Order::Second)?);
    if !(lo < hi) {
        return Err(CliError::Usage(format!("window lies below the lowest admissible energy {lo}")));
    }
    let mut report = Report::new(&["E", "S0", "T", "J", "S2", "S0_error", "T_error", "J_error", "S2_discrepancy"]);
    for e in energy_grid(lo, hi, cfg.points) {
        let d = action_data(well, e)?;
        report.push(vec![
            d.energy.into(),
            d.s0.into(),
            d.t.into(),
            d.j.into(),
            d.s2.into(),
            d.s0_error.into(),
            d.t_error.into(),
            d.j_error.into(),
            d.s2_error.into(),
        ]);
    }
    report.set("E_lo", lo);
    report.set("E_hi", hi);
    Ok(report)
}

fn gram(cfg: &RunConfig, well: &Well<'_>) -> Result<Report, CliError> {
    let h = cfg.hs[0];
    let scan = gram_scan(well, window(cfg), h, cfg.points)?;
    let zeros = gram_zeros(well, &scan)?;
    let mut report = if cfg.zeros {
        let mut report = Report::new(&["k", "E"]);
        for (k, &z) in zeros.iter().enumerate() {
            report.push(vec![k.into(), z.into()]);
        }
        report
    } else {
        let mut report = Report::new(&["E", "D", "argument"]);
        for g in &scan {
            report.push(vec![g.energy.into(), g.value.into(), g.argument.into()]);
        }
        report
    };
    report.set("zeros", zeros.len());
    if let (Some(first), Some(last)) = (scan.first(), scan.last()) {
        report.set("E_lo", first.energy);
        report.set("E_hi", last.energy);
    }
    Ok(report)
}

fn wkb_residual(cfg: &RunConfig, well: &Well<'_>) -> Result<Report, CliError> {
    let energy = cfg.energy.expect("energy validated for wkb-residual");
    let mut report = Report::new(&["h", "x", "total", "envelope", "relative"]);
    let mut envelopes = vec![Vec::new(); cfg.x.len()];
    for &h in &cfg.hs {
        for (i, &x) in cfg.x.iter().enumerate() {
            let r = residual_estimate(well, energy, h, x, cfg.h2_correction)?;
            envelopes[i].push(r.envelope);
            report.push(vec![h.into(), x.into(), r.total.into(), r.envelope.into(), r.relative.into()]);
        }
    }
    if cfg.hs.len() >= 2 {
        let orders: Vec<String> = envelopes
            .iter()
            .map(|env| fit_order(&cfg.hs, env).map(|o| format!("{o:.16e}")))
            .collect::<Result<_, _>>()?;
        report.set("fitted_orders", Cell::Text(orders.join(" ")));
    }
    Ok(report)
}
