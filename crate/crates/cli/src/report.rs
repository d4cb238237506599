use std::io::Write;

use serde_json::{json, Map, Value};

use crate::config::{Format, RunConfig};

/// A table cell. Floats are written with 17 significant digits in CSV.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => float(*v),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Float(v) if v.is_finite() => json!(v),
            Cell::Float(v) => json!(v.to_string()),
            Cell::Text(s) => json!(s),
        }
    }
}

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Tabular output of one command plus scalar results.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: Vec<(&'static str, Cell)>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn new(columns: &[&'static str]) -> Self {
        Report { columns: columns.to_vec(), ..Report::default() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn set(&mut self, key: &'static str, value: impl Into<Cell>) {
        self.summary.push((key, value.into()));
    }

    pub fn render(&self, cfg: &RunConfig) -> String {
        match cfg.format {
            Format::Csv => self.csv(cfg),
            Format::Json => self.json(cfg),
        }
    }

    fn csv(&self, cfg: &RunConfig) -> String {
        let mut out = format!("# bsquant {}\n", env!("CARGO_PKG_VERSION"));
        for (k, v) in cfg.provenance() {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        for (k, v) in &self.summary {
            out.push_str(&format!("# result.{k} = {}\n", v.csv()));
        }
        for w in &self.warnings {
            out.push_str(&format!("# warning = {w}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.iter().map(Cell::csv).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }

    fn json(&self, cfg: &RunConfig) -> String {
        let config: Map<String, Value> = cfg.provenance().into_iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
        let summary: Map<String, Value> = self.summary.iter().map(|(k, v)| (k.to_string(), v.json())).collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let m: Map<String, Value> =
                    self.columns.iter().zip(row).map(|(c, v)| (c.to_string(), v.json())).collect();
                Value::Object(m)
            })
            .collect();
        let doc = json!({
            "tool": "bsquant",
            "version": env!("CARGO_PKG_VERSION"),
            "command": cfg.command.name(),
            "config": config,
            "summary": summary,
            "warnings": self.warnings,
            "columns": self.columns,
            "rows": rows,
        });
        let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
        text.push('\n');
        text
    }

    pub fn write(&self, cfg: &RunConfig) -> Result<(), crate::error::CliError> {
        let text = self.render(cfg);
        match &cfg.out {
            Some(path) => std::fs::write(path, text)
                .map_err(|error| crate::error::CliError::Output { path: path.display().to_string(), error }),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(text.as_bytes())
                    .and_then(|_| stdout.flush())
                    .map_err(|error| crate::error::CliError::Output { path: "stdout".into(), error })
            }
        }
    }
}
