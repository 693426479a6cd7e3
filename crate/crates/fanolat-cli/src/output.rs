//! Deterministic table emission: CSV with '#'-prefixed metadata or a JSON
//! document, plus a JSON sidecar carrying the full parameter set and tool
//! version. Floats are printed with 17 significant digits so files
//! round-trip exactly and reruns are byte-identical.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Metadata as ordered key/value pairs; order is preserved in both the CSV
/// header comments and the sidecar.
pub type Meta = Vec<(String, String)>;

pub fn base_meta(command: &str) -> Meta {
    vec![
        ("tool".into(), "fanolat".into()),
        ("version".into(), env!("CARGO_PKG_VERSION").into()),
        ("command".into(), command.into()),
    ]
}

pub struct Table<'a> {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub meta: &'a Meta,
}

impl Table<'_> {
    pub fn write(&self, path: &Path, format: OutputFormat) -> std::io::Result<()> {
        match format {
            OutputFormat::Csv => self.write_csv(path)?,
            OutputFormat::Json => self.write_json(path)?,
        }
        write_sidecar(path, self.meta)
    }

    fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        for (k, v) in self.meta {
            writeln!(w, "# {k} = {v}")?;
        }
        writeln!(w, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|&x| fmt_float(x)).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        w.flush()
    }

    fn write_json(&self, path: &Path) -> std::io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        let doc = serde_json::json!({
            "meta": meta_map(self.meta),
            "columns": self.columns,
            "rows": self.rows.iter()
                .map(|row| row.iter().map(|&x| fmt_float(x)).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        });
        writeln!(w, "{}", serde_json::to_string_pretty(&doc)?)?;
        w.flush()
    }
}

fn meta_map(meta: &Meta) -> serde_json::Value {
    let mut map = serde_json::Map::new();
    for (k, v) in meta {
        map.insert(k.clone(), serde_json::Value::String(v.clone()));
    }
    serde_json::Value::Object(map)
}

/// `<stem>.meta.json` next to the data file.
pub fn write_sidecar(data_path: &Path, meta: &Meta) -> std::io::Result<()> {
    let mut sidecar = data_path.to_path_buf();
    let stem = sidecar
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".into());
    sidecar.set_file_name(format!("{stem}.meta.json"));
    let mut w = BufWriter::new(File::create(sidecar)?);
    writeln!(w, "{}", serde_json::to_string_pretty(&meta_map(meta))?)?;
    w.flush()
}

/// Free-form JSON report with the same sidecar-style metadata embedded.
pub fn write_report(path: &Path, meta: &Meta, body: serde_json::Value) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let doc = serde_json::json!({ "meta": meta_map(meta), "report": body });
    writeln!(w, "{}", serde_json::to_string_pretty(&doc)?)?;
    w.flush()
}
