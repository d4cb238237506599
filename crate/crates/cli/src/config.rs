use std::fmt;
use std::path::{Path, PathBuf};

use bsquant::Order;
use clap::{Parser, ValueEnum};

use crate::error::CliError;

pub const GRID_N_RANGE: (usize, usize) = (16, 10_000_000);
const DEFAULT_GRID_N: usize = 8000;
const DEFAULT_ACTION_POINTS: usize = 50;
const DEFAULT_GRAM_POINTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Spectrum,
    Compare,
    Action,
    Gram,
    WkbResidual,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Compare => "compare",
            Command::Action => "action",
            Command::Gram => "gram",
            Command::WkbResidual => "wkb-residual",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

/// Bohr-Sommerfeld spectra, reference comparisons and WKB diagnostics for
/// one-dimensional potential wells.
#[derive(Debug, Parser)]
#[command(name = "bsquant", version, allow_negative_numbers = true)]
pub struct Cli {
    /// Pipeline to run; may also come from the config file.
    #[arg(value_enum)]
    pub command: Option<Command>,
    /// Potential V(x), e.g. "x^2 + 0.5*x^4".
    #[arg(long)]
    pub potential: Option<String>,
    /// Semiclassical parameter.
    #[arg(long)]
    pub h: Option<f64>,
    /// Several values of h, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub h_sweep: Option<Vec<f64>>,
    /// Energy window.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    pub window: Option<Vec<f64>>,
    /// Quantization order, 1 or 2.
    #[arg(long)]
    pub order: Option<u8>,
    /// Interior points of the coarse reference grid.
    #[arg(long)]
    pub grid_n: Option<usize>,
    /// Dirichlet box of the reference solver (default: chosen from the well).
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    pub domain: Option<Vec<f64>>,
    /// Interval searched for the well (default: [-10, 10]).
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    pub search: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `key = value` file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Energy grid size for `action` and `gram`.
    #[arg(long)]
    pub points: Option<usize>,
    /// Energy of the WKB state.
    #[arg(long)]
    pub energy: Option<f64>,
    /// Sample points for `wkb-residual`, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Option<Vec<f64>>,
    /// Leave out the h² phase of the WKB state.
    #[arg(long)]
    pub no_h2_correction: bool,
    /// Report refined zeros of D instead of the raw grid.
    #[arg(long)]
    pub zeros: bool,
}

/// Settings merged from the config file and the command line, before validation.
#[derive(Debug, Default, Clone)]
struct Partial {
    command: Option<Command>,
    potential: Option<String>,
    h: Option<f64>,
    h_sweep: Option<Vec<f64>>,
    window: Option<(f64, f64)>,
    order: Option<u8>,
    grid_n: Option<usize>,
    domain: Option<(f64, f64)>,
    search: Option<(f64, f64)>,
    format: Option<Format>,
    out: Option<PathBuf>,
    points: Option<usize>,
    energy: Option<f64>,
    x: Option<Vec<f64>>,
    h2_correction: Option<bool>,
    zeros: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub potential: String,
    /// Values of h to run, in the given order.
    pub hs: Vec<f64>,
    pub sweep: bool,
    pub window: Option<(f64, f64)>,
    pub order: Order,
    pub grid_n: usize,
    pub domain: Option<(f64, f64)>,
    pub search: Option<(f64, f64)>,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub points: usize,
    pub energy: Option<f64>,
    pub x: Vec<f64>,
    pub h2_correction: bool,
    pub zeros: bool,
}

fn pair(v: Vec<f64>, key: &str) -> Result<(f64, f64), CliError> {
    match v[..] {
        [a, b] => Ok((a, b)),
        _ => Err(CliError::Usage(format!("--{key} takes exactly two numbers"))),
    }
}

fn numbers(text: &str) -> Result<Vec<f64>, String> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| format!("`{s}` is not a number")))
        .collect()
}

fn parse_bool(text: &str) -> Result<bool, String> {
    match text {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(format!("`{text}` is not a boolean")),
    }
}

fn parse_config(text: &str, path: &Path) -> Result<Partial, CliError> {
    let mut cfg = Partial::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| CliError::Usage(format!("{}:{}: {msg}", path.display(), i + 1));
        let (key, value) = line.split_once('=').ok_or_else(|| err("expected `key = value`".into()))?;
        let (key, value) = (key.trim(), value.trim());
        let num = |v: &str| v.parse::<f64>().map_err(|_| format!("`{v}` is not a number"));
        let two = |v: &str| -> Result<(f64, f64), String> {
            match numbers(v)?[..] {
                [a, b] => Ok((a, b)),
                _ => Err(format!("`{key}` takes exactly two numbers")),
            }
        };
        let parsed: Result<(), String> = (|| {
            match key {
                "command" => {
                    cfg.command =
                        Some(Command::from_str(value, true).map_err(|_| format!("unknown command `{value}`"))?)
                }
                "potential" => cfg.potential = Some(value.to_string()),
                "h" => cfg.h = Some(num(value)?),
                "h-sweep" => cfg.h_sweep = Some(numbers(value)?),
                "window" => cfg.window = if value == "none" { None } else { Some(two(value)?) },
                "order" => cfg.order = Some(value.parse().map_err(|_| format!("`{value}` is not an order"))?),
                "grid-n" => cfg.grid_n = Some(value.parse().map_err(|_| format!("`{value}` is not a grid size"))?),
                "domain" => cfg.domain = if value == "auto" { None } else { Some(two(value)?) },
                "search" => cfg.search = if value == "default" { None } else { Some(two(value)?) },
                "format" => {
                    cfg.format = Some(Format::from_str(value, true).map_err(|_| format!("unknown format `{value}`"))?)
                }
                "out" => cfg.out = if value == "stdout" { None } else { Some(PathBuf::from(value)) },
                "points" => cfg.points = Some(value.parse().map_err(|_| format!("`{value}` is not a count"))?),
                "energy" => cfg.energy = Some(num(value)?),
                "x" => cfg.x = Some(numbers(value)?),
                "h2-correction" => cfg.h2_correction = Some(parse_bool(value)?),
                "zeros" => cfg.zeros = Some(parse_bool(value)?),
                _ => return Err(format!("unknown key `{key}`")),
            }
            Ok(())
        })();
        parsed.map_err(err)?;
    }
    Ok(cfg)
}

impl Partial {
    fn overlay(self, cli: Cli) -> Result<Partial, CliError> {
        Ok(Partial {
            command: cli.command.or(self.command),
            potential: cli.potential.or(self.potential),
            h: cli.h.or(self.h),
            h_sweep: cli.h_sweep.or(self.h_sweep),
            window: cli.window.map(|v| pair(v, "window")).transpose()?.or(self.window),
            order: cli.order.or(self.order),
            grid_n: cli.grid_n.or(self.grid_n),
            domain: cli.domain.map(|v| pair(v, "domain")).transpose()?.or(self.domain),
            search: cli.search.map(|v| pair(v, "search")).transpose()?.or(self.search),
            format: cli.format.or(self.format),
            out: cli.out.or(self.out),
            points: cli.points.or(self.points),
            energy: cli.energy.or(self.energy),
            x: cli.x.or(self.x),
            h2_correction: if cli.no_h2_correction { Some(false) } else { self.h2_correction },
            zeros: if cli.zeros { Some(true) } else { self.zeros },
        })
    }
}

fn check_interval(name: &str, (lo, hi): (f64, f64)) -> Result<(), CliError> {
    if lo.is_finite() && hi.is_finite() && lo < hi {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--{name} must satisfy LO < HI, got {lo} {hi}")))
    }
}

impl RunConfig {
    /// Reads `--config` if given, overlays the flags and validates the result.
    pub fn resolve(cli: Cli) -> Result<RunConfig, CliError> {
        let base = match &cli.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
                parse_config(&text, path)?
            }
            None => Partial::default(),
        };
        let p = base.overlay(cli)?;
        let usage = |msg: &str| CliError::Usage(msg.to_string());

        let command =
            p.command.ok_or_else(|| usage("no command given (spectrum, compare, action, gram, wkb-residual)"))?;
        let potential = p.potential.ok_or_else(|| usage("--potential is required"))?;
        let (hs, sweep) = match (p.h, p.h_sweep) {
            (Some(_), Some(_)) => return Err(usage("give either --h or --h-sweep, not both")),
            (Some(h), None) => (vec![h], false),
            (None, Some(hs)) if !hs.is_empty() => (hs, true),
            (None, Some(_)) => return Err(usage("--h-sweep needs at least one value")),
            (None, None) if command == Command::Action => (Vec::new(), false),
            (None, None) => return Err(usage("--h or --h-sweep is required")),
        };
        if let Some(&bad) = hs.iter().find(|h| !(**h > 0.0 && h.is_finite())) {
            return Err(CliError::Usage(format!("h must be positive, got {bad}")));
        }
        if sweep && command == Command::Gram {
            return Err(usage("gram takes a single --h"));
        }
        let order = match p.order.unwrap_or(2) {
            k @ (1 | 2) => Order::from_int(k).map_err(|e| CliError::Usage(e.to_string()))?,
            k => return Err(CliError::Usage(format!("--order must be 1 or 2, got {k}"))),
        };
        let grid_n = p.grid_n.unwrap_or(DEFAULT_GRID_N);
        if !(GRID_N_RANGE.0..=GRID_N_RANGE.1).contains(&grid_n) {
            return Err(CliError::Usage(format!(
                "--grid-n must lie in [{}, {}], got {grid_n}",
                GRID_N_RANGE.0, GRID_N_RANGE.1
            )));
        }
        let window = p.window;
        if let Some(w) = window {
            check_interval("window", w)?;
        } else if command != Command::WkbResidual {
            return Err(usage("--window is required"));
        }
        for (name, iv) in [("domain", p.domain), ("search", p.search)] {
            if let Some(iv) = iv {
                check_interval(name, iv)?;
            }
        }
        let points = p.points.unwrap_or(match command {
            Command::Gram => DEFAULT_GRAM_POINTS,
            _ => DEFAULT_ACTION_POINTS,
        });
        if points < 2 {
            return Err(usage("--points must be at least 2"));
        }
        let x = p.x.unwrap_or_default();
        if command == Command::WkbResidual {
            if p.energy.is_none() {
                return Err(usage("wkb-residual needs --energy"));
            }
            if x.is_empty() {
                return Err(usage("wkb-residual needs at least one --x"));
            }
        }
        Ok(RunConfig {
            command,
            potential,
            hs,
            sweep,
            window,
            order,
            grid_n,
            domain: p.domain,
            search: p.search,
            format: p.format.unwrap_or(Format::Csv),
            out: p.out,
            points,
            energy: p.energy,
            x,
            h2_correction: p.h2_correction.unwrap_or(true),
            zeros: p.zeros.unwrap_or(false),
        })
    }

    /// The resolved settings as `(key, value)` pairs, in config-file syntax.
    pub fn provenance(&self) -> Vec<(&'static str, String)> {
        let list = |v: &[f64]| v.iter().map(|h| h.to_string()).collect::<Vec<_>>().join(", ");
        let iv = |v: Option<(f64, f64)>, default: &str| match v {
            Some((a, b)) => format!("{a} {b}"),
            None => default.to_string(),
        };
        let mut out = vec![("command", self.command.name().to_string()), ("potential", self.potential.clone())];
        match (self.sweep, self.hs.as_slice()) {
            (_, []) => {}
            (false, [h]) => out.push(("h", h.to_string())),
            _ => out.push(("h-sweep", list(&self.hs))),
        }
        out.push(("window", iv(self.window, "none")));
        out.push(("order", self.order.as_int().to_string()));
        out.push(("grid-n", self.grid_n.to_string()));
        out.push(("domain", iv(self.domain, "auto")));
        out.push(("search", iv(self.search, "default")));
        out.push(("format", self.format.to_string()));
        out.push(("out", self.out.as_ref().map_or("stdout".to_string(), |p| p.display().to_string())));
        out.push(("points", self.points.to_string()));
        if let Some(e) = self.energy {
            out.push(("energy", e.to_string()));
        }
        if !self.x.is_empty() {
            out.push(("x", list(&self.x)));
        }
        out.push(("h2-correction", self.h2_correction.to_string()));
        out.push(("zeros", self.zeros.to_string()));
        out
    }
}
