//! Experiment output tables and byte-stable persistence.
//!
//! Every float is serialized with 17 significant digits so files are
//! byte-identical across reruns and round-trip losslessly. CSV quoting
//! follows RFC 4180.

use crate::error::{Error, Result};
use crate::harness::scenario::{fmt_kappa, ScenarioSpec};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// 17-significant-digit float rendering (round-trips exactly).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    UInt(u64),
    Float(f64),
    Str(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::UInt(v) => v.to_string(),
            Cell::Float(v) => fmt_f64(*v),
            Cell::Str(s) => csv_quote(s),
        }
    }
}

fn csv_quote(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') || s.contains('\r') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Column-ordered table with one row per record.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width must match header");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.iter().map(|c| csv_quote(c)).collect::<Vec<_>>().join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.iter().map(Cell::render).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }

    /// Index of a named column.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

/// Minimal JSON value with deterministic key order and pinned float format.
#[derive(Debug, Clone)]
pub enum Json {
    Bool(bool),
    Int(i64),
    UInt(u64),
    Num(f64),
    Str(String),
    Arr(Vec<Json>),
    Obj(Vec<(String, Json)>),
}

impl Json {
    pub fn render(&self) -> String {
        let mut s = String::new();
        self.write(&mut s);
        s
    }

    fn write(&self, out: &mut String) {
        match self {
            Json::Bool(b) => {
                let _ = write!(out, "{b}");
            }
            Json::Int(v) => {
                let _ = write!(out, "{v}");
            }
            Json::UInt(v) => {
                let _ = write!(out, "{v}");
            }
            Json::Num(v) => {
                let _ = write!(out, "{}", fmt_f64(*v));
            }
            Json::Str(s) => write_json_string(out, s),
            Json::Arr(items) => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    item.write(out);
                }
                out.push(']');
            }
            Json::Obj(fields) => {
                out.push('{');
                for (i, (k, v)) in fields.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    write_json_string(out, k);
                    out.push(':');
                    v.write(out);
                }
                out.push('}');
            }
        }
    }
}

fn write_json_string(out: &mut String, s: &str) {
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

impl ScenarioSpec {
    /// Spec echo for the summary file. Kappas are rendered as strings so the
    /// pure line-of-sight value survives JSON.
    pub fn to_json(&self) -> Json {
        let arr = |v: &[f64]| Json::Arr(v.iter().map(|&x| Json::Num(x)).collect());
        Json::Obj(vec![
            ("m".into(), Json::UInt(self.m as u64)),
            ("n1".into(), Json::UInt(self.n1 as u64)),
            ("n2".into(), Json::UInt(self.n2 as u64)),
            ("nc".into(), Json::UInt(self.nc as u64)),
            ("co_ue_position".into(), arr(&self.co_ue_position)),
            ("kappa1".into(), Json::Str(fmt_kappa(self.kappa1))),
            ("kappa_c".into(), Json::Str(fmt_kappa(self.kappa_c))),
            ("kappa_p".into(), Json::Str(fmt_kappa(self.kappa_p))),
            ("snr_db".into(), Json::Num(self.snr_db)),
            ("snr_sweep_db".into(), arr(&self.snr_sweep_db)),
            ("distances_m".into(), arr(&self.distances_m)),
            ("q".into(), Json::UInt(self.q as u64)),
            ("structure".into(), Json::Str(self.structure.label().into())),
            ("algorithm".into(), Json::Str(self.algorithm.label().into())),
            ("order".into(), Json::Str(self.order.label().into())),
            ("rounds".into(), Json::UInt(self.rounds as u64)),
            ("rms_trials".into(), Json::UInt(self.rms_trials as u64)),
            ("trials".into(), Json::UInt(self.trials as u64)),
            ("seed".into(), Json::UInt(self.seed)),
            ("path_loss".into(), Json::Bool(self.path_loss)),
            ("rho".into(), Json::Num(self.rho)),
            ("f_low_hz".into(), Json::Num(self.f_low_hz)),
            ("f_high_hz".into(), Json::Num(self.f_high_hz)),
            ("bandwidth_hz".into(), Json::Num(self.bandwidth_hz)),
            ("overhead".into(), Json::Num(self.overhead)),
        ])
    }
}

/// Complete result of one experiment run.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub name: String,
    /// One row per Monte-Carlo trial.
    pub records: Table,
    /// Figure-style aggregates, one file each under plotdata/.
    pub plotdata: Vec<(String, Table)>,
    /// Scalar aggregates for the summary file.
    pub aggregates: Vec<(String, Json)>,
    pub spec: ScenarioSpec,
}

impl ExperimentOutput {
    pub fn aggregate_f64(&self, key: &str) -> Option<f64> {
        self.aggregates.iter().find(|(k, _)| k == key).and_then(|(_, v)| match v {
            Json::Num(x) => Some(*x),
            Json::Int(x) => Some(*x as f64),
            Json::UInt(x) => Some(*x as f64),
            _ => None,
        })
    }

    pub fn summary_json(&self) -> Json {
        Json::Obj(vec![
            ("experiment".into(), Json::Str(self.name.clone())),
            ("toolkit_version".into(), Json::Str(env!("CARGO_PKG_VERSION").into())),
            ("seed".into(), Json::UInt(self.spec.seed)),
            ("trials".into(), Json::UInt(self.spec.trials as u64)),
            ("spec".into(), self.spec.to_json()),
            ("aggregates".into(), Json::Obj(self.aggregates.clone())),
        ])
    }
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

/// Writes records.csv, summary.json and plotdata/*.csv under `dir`.
/// Reruns with the same output produce byte-identical files.
pub fn emit_outputs(output: &ExperimentOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.display().to_string(), source })?;
    write_file(&dir.join("records.csv"), &output.records.to_csv())?;
    let mut summary = output.summary_json().render();
    summary.push('\n');
    write_file(&dir.join("summary.json"), &summary)?;
    let plotdir = dir.join("plotdata");
    fs::create_dir_all(&plotdir).map_err(|source| Error::Io { path: plotdir.display().to_string(), source })?;
    for (name, table) in &output.plotdata {
        write_file(&plotdir.join(format!("{name}.csv")), &table.to_csv())?;
    }
    Ok(())
}

/// Mean and sample standard deviation, left-to-right summation so the
/// result is reproducible from the emitted records.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Normal-approximation 95% confidence half-width of the mean.
pub fn ci95_half_width(std: f64, n: usize) -> f64 {
    1.96 * std / (n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for &x in &[0.0, 1.0, -1.5, std::f64::consts::PI, 1e-300, 123456.789, f64::MIN_POSITIVE] {
            let s = fmt_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn csv_quoting() {
        let mut t = Table::new(vec!["a".into(), "b".into()]);
        t.push(vec![Cell::Str("plain".into()), Cell::Str("with,comma".into())]);
        t.push(vec![Cell::Str("has \"quote\"".into()), Cell::Int(-3)]);
        let csv = t.to_csv();
        assert!(csv.contains("\"with,comma\""));
        assert!(csv.contains("\"has \"\"quote\"\"\""));
    }

    #[test]
    fn json_renders_and_escapes() {
        let j = Json::Obj(vec![
            ("s".into(), Json::Str("line\nbreak \"x\"".into())),
            ("n".into(), Json::Num(2.5)),
            ("a".into(), Json::Arr(vec![Json::Bool(true), Json::Int(-1)])),
        ]);
        let s = j.render();
        assert!(s.contains("\\n"));
        assert!(s.contains("2.5000000000000000e0"));
        assert!(s.starts_with('{') && s.ends_with('}'));
    }

    #[test]
    fn mean_std_basics() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert!((m - 2.0).abs() < 1e-15);
        assert!((s - 1.0).abs() < 1e-12);
    }
}
