use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bsquant(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bsquant")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

struct Csv {
    header: Vec<(String, String)>,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    fn parse(text: &str) -> Csv {
        let mut header = Vec::new();
        let mut lines = text.lines();
        let mut columns = Vec::new();
        for line in lines.by_ref() {
            if let Some(rest) = line.strip_prefix("# ") {
                if let Some((k, v)) = rest.split_once(" = ") {
                    header.push((k.to_string(), v.to_string()));
                }
            } else {
                columns = line.split(',').map(str::to_string).collect();
                break;
            }
        }
        let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
        Csv { header, columns, rows }
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.header.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn column(&self, name: &str) -> Vec<f64> {
        let i = self.columns.iter().position(|c| c == name).unwrap_or_else(|| panic!("no column {name}"));
        self.rows.iter().map(|r| r[i].parse().unwrap()).collect()
    }
}

#[test]
fn harmonic_spectrum() {
    let out = bsquant(&["spectrum", "--potential", "x^2", "--h", "0.05", "--window", "0.04", "1", "--order", "2"]);
    let csv = Csv::parse(&stdout(&out));
    let (ns, es) = (csv.column("n"), csv.column("E"));
    assert_eq!(ns, (0..10).map(f64::from).collect::<Vec<_>>());
    for (n, e) in ns.iter().zip(&es) {
        assert!((e - 0.05 * (2.0 * n + 1.0)).abs() < 1e-12);
    }
}

#[test]
fn harmonic_orders_agree() {
    let run = |order| {
        let out =
            bsquant(&["spectrum", "--potential", "x^2", "--h", "0.05", "--window", "0.04", "1", "--order", order]);
        Csv::parse(&stdout(&out))
    };
    let (first, second) = (run("1"), run("2"));
    assert_eq!(first.column("n"), second.column("n"));
    for (a, b) in first.column("E").iter().zip(second.column("E")) {
        assert!((a - b).abs() < 1e-13);
    }
}

#[test]
fn provenance_header_is_complete() {
    let out = bsquant(&["spectrum", "--potential", "x^2 + 0.5*x^4", "--h", "0.1", "--window", "0", "1"]);
    let csv = Csv::parse(&stdout(&out));
    assert_eq!(csv.get("command"), Some("spectrum"));
    assert_eq!(csv.get("potential"), Some("x^2 + 0.5*x^4"));
    assert_eq!(csv.get("h"), Some("0.1"));
    assert_eq!(csv.get("window"), Some("0 1"));
    assert_eq!(csv.get("order"), Some("2"));
    assert_eq!(csv.get("domain"), Some("auto"));
    assert_eq!(csv.get("format"), Some("csv"));
}

#[test]
fn malformed_potential_is_a_usage_error() {
    let out = bsquant(&["spectrum", "--potential", "x^2 +* 3", "--h", "0.05", "--window", "0", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("x^2 +* 3\n     ^"), "{err}");
}

#[test]
fn exit_codes() {
    let usage = bsquant(&["spectrum", "--potential", "x^2", "--h", "-1", "--window", "0", "1"]);
    assert_eq!(usage.status.code(), Some(1));
    let bad_grid = bsquant(&["compare", "--potential", "x^2", "--h", "0.1", "--window", "0", "1", "--grid-n", "15"]);
    assert_eq!(bad_grid.status.code(), Some(1));
    let geometry = bsquant(&["spectrum", "--potential", "x^3", "--h", "0.05", "--window", "0", "1"]);
    assert_eq!(geometry.status.code(), Some(2));
    // A 16-point grid cannot hold fifty levels, so the counts disagree.
    let numeric = bsquant(&["compare", "--potential", "x^2", "--h", "0.01", "--window", "0", "1", "--grid-n", "16"]);
    assert_eq!(numeric.status.code(), Some(3), "{}", String::from_utf8_lossy(&numeric.stderr));
    assert_eq!(bsquant(&["--help"]).status.code(), Some(0));
}

#[test]
fn quartic_sweep_fits_an_order() {
    let out = bsquant(&[
        "compare",
        "--potential",
        "x^4",
        "--h-sweep",
        "0.2,0.1,0.05",
        "--window",
        "0.8",
        "1.5",
        "--grid-n",
        "8000",
    ]);
    let csv = Csv::parse(&stdout(&out));
    assert_eq!(csv.rows.len(), 3);
    assert_eq!(csv.column("h"), vec![0.2, 0.1, 0.05]);
    assert!(csv.column("count_mismatch").iter().all(|&c| c == 0.0));
    let order: f64 = csv.get("result.fitted_order").unwrap().parse().unwrap();
    assert!(order >= 3.0, "{order}");
}

#[test]
fn action_table_for_the_harmonic_well() {
    let out = bsquant(&["action", "--potential", "x^2", "--window", "0.5", "3", "--points", "26"]);
    let csv = Csv::parse(&stdout(&out));
    let (es, s0, t, s2) = (csv.column("E"), csv.column("S0"), csv.column("T"), csv.column("S2"));
    assert_eq!(es.len(), 26);
    for i in 0..es.len() {
        assert!((s0[i] - std::f64::consts::PI * es[i]).abs() < 1e-10);
        assert!(s2[i].abs() < 1e-9);
    }
    for i in 1..es.len() - 1 {
        let slope = (s0[i + 1] - s0[i - 1]) / (es[i + 1] - es[i - 1]);
        assert!((slope - t[i]).abs() < 1e-9 * t[i]);
    }
}

#[test]
fn gram_zeros_match_the_spectrum() {
    let common = ["--potential", "x^2 + 0.5*x^4", "--h", "0.05", "--window", "0", "1.5"];
    let grid = Csv::parse(&stdout(&bsquant(&[&["gram"], &common[..], &["--points", "4000"]].concat())));
    assert!(grid.column("D").iter().all(|d| (-1.0..=0.0).contains(d)));
    let zeros = Csv::parse(&stdout(&bsquant(&[&["gram"], &common[..], &["--points", "4000", "--zeros"]].concat())));
    let levels = Csv::parse(&stdout(&bsquant(&[&["spectrum"], &common[..]].concat())));
    let (z, e) = (zeros.column("E"), levels.column("E"));
    assert_eq!(z.len(), e.len());
    for (a, b) in z.iter().zip(&e) {
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
}

#[test]
fn wkb_residual_order() {
    let out = bsquant(&[
        "wkb-residual",
        "--potential",
        "x^2 + 0.5*x^4",
        "--energy",
        "1",
        "--h-sweep",
        "0.04,0.02,0.01",
        "--x",
        "-0.4,0.2",
    ]);
    let csv = Csv::parse(&stdout(&out));
    assert_eq!(csv.rows.len(), 6);
    let orders: Vec<f64> = csv.get("result.fitted_orders").unwrap().split(' ').map(|s| s.parse().unwrap()).collect();
    assert_eq!(orders.len(), 2);
    assert!(orders.iter().all(|&o| o >= 2.0), "{orders:?}");
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# harmonic run\ncommand = spectrum\npotential = x^2\nh = 0.1\nwindow = 0 1\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let from_file = Csv::parse(&stdout(&bsquant(&["--config", cfg])));
    assert_eq!(from_file.get("h"), Some("0.1"));
    assert_eq!(from_file.rows.len(), 5);
    let overridden = Csv::parse(&stdout(&bsquant(&["--config", cfg, "--h", "0.05"])));
    assert_eq!(overridden.get("h"), Some("0.05"));
    assert_eq!(overridden.rows.len(), 10);

    std::fs::write(dir.path().join("bad.cfg"), "potential = x^2\nwidth = 3\n").unwrap();
    let bad = bsquant(&["spectrum", "--config", dir.path().join("bad.cfg").to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("bad.cfg:2: unknown key `width`"));
}

#[test]
fn header_replays_as_a_config() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.csv");
    let args = ["compare", "--potential", "x^2 + 0.5*x^4", "--h", "0.1", "--window", "0", "1", "--grid-n", "2000"];
    let out = bsquant(&[&args[..], &["--out", first.to_str().unwrap()]].concat());
    assert!(out.status.success());
    let text = std::fs::read_to_string(&first).unwrap();
    let replay: String = Csv::parse(&text)
        .header
        .iter()
        .filter(|(k, _)| !k.starts_with("result.") && k != "out" && k != "bsquant")
        .map(|(k, v)| format!("{k} = {v}\n"))
        .collect();
    let cfg = dir.path().join("replay.cfg");
    std::fs::write(&cfg, replay).unwrap();
    let again = stdout(&bsquant(&["--config", cfg.to_str().unwrap()]));
    let original = stdout(&bsquant(&args));
    assert_eq!(again, original);
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let p = path.to_str().unwrap();
    let args = ["compare", "--potential", "x^4", "--h", "0.1", "--window", "0", "2", "--format", "json", "--out", p];
    assert!(bsquant(&args).status.success());
    let first = std::fs::read(&path).unwrap();
    assert!(bsquant(&args).status.success());
    assert_eq!(first, std::fs::read(&path).unwrap());
}

fn type_ok(value: &Value, allowed: &Value) -> bool {
    let names: Vec<&str> = match allowed {
        Value::String(s) => vec![s.as_str()],
        Value::Array(v) => v.iter().filter_map(Value::as_str).collect(),
        _ => return true,
    };
    names.iter().any(|t| match *t {
        "number" => value.is_number(),
        "integer" => value.is_i64() || value.is_u64(),
        "string" => value.is_string(),
        "array" => value.is_array(),
        "object" => value.is_object(),
        _ => false,
    })
}

/// Checks the parts of the schema a report can violate: required keys,
/// closed top level, constants, enums, value types and the column lists.
fn validate(doc: &Value, schema: &Value) {
    let props = schema["properties"].as_object().unwrap();
    for key in schema["required"].as_array().unwrap() {
        assert!(doc.get(key.as_str().unwrap()).is_some(), "missing {key}");
    }
    for key in doc.as_object().unwrap().keys() {
        assert!(props.contains_key(key), "unexpected key {key}");
    }
    assert_eq!(doc["tool"], props["tool"]["const"]);
    assert!(props["command"]["enum"].as_array().unwrap().contains(&doc["command"]));
    for key in props["config"]["required"].as_array().unwrap() {
        assert!(doc["config"].get(key.as_str().unwrap()).is_some(), "config lacks {key}");
    }
    for v in doc["config"].as_object().unwrap().values() {
        assert!(v.is_string());
    }
    let scalar = &props["summary"]["additionalProperties"]["type"];
    for v in doc["summary"].as_object().unwrap().values() {
        assert!(type_ok(v, scalar), "{v}");
    }
    let columns: Vec<&str> = doc["columns"].as_array().unwrap().iter().map(|c| c.as_str().unwrap()).collect();
    let documented = schema["$defs"]["columns"].as_object().unwrap();
    assert!(documented.values().any(|v| v
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c.as_str().unwrap())
        .eq(columns.iter().copied())));
    let cell = &props["rows"]["items"]["additionalProperties"]["type"];
    for row in doc["rows"].as_array().unwrap() {
        let row = row.as_object().unwrap();
        assert!(row.keys().map(String::as_str).eq(columns.iter().copied()));
        assert!(row.values().all(|v| type_ok(v, cell)));
    }
}

#[test]
fn json_reports_follow_the_schema() {
    let schema_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/report.schema.json");
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(schema_path).unwrap()).unwrap();
    let runs: [&[&str]; 7] = [
        &["spectrum", "--potential", "x^2", "--h", "0.1", "--window", "0", "1"],
        &["compare", "--potential", "x^4", "--h", "0.1", "--window", "0", "1", "--grid-n", "2000"],
        &["compare", "--potential", "x^4", "--h-sweep", "0.2,0.1", "--window", "0", "1", "--grid-n", "2000"],
        &["action", "--potential", "x^2 + x^4", "--window", "0", "1", "--points", "5"],
        &["gram", "--potential", "x^2", "--h", "0.1", "--window", "0", "1", "--points", "50"],
        &["gram", "--potential", "x^2", "--h", "0.1", "--window", "0", "1", "--points", "50", "--zeros"],
        &["wkb-residual", "--potential", "x^2", "--energy", "1", "--h-sweep", "0.02,0.01", "--x", "0.1"],
    ];
    for args in runs {
        let out = stdout(&bsquant(&[args, &["--format", "json"]].concat()));
        let doc: Value = serde_json::from_str(&out).unwrap();
        validate(&doc, &schema);
    }
}
