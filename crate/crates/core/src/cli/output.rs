//! Result tables and their CSV / JSON encodings.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value as Json};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Str(String),
    Float(f64),
    Int(u64),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Str(s) => s.clone(),
            // shortest representation that parses back to the same value
            Cell::Float(x) => format!("{x:?}"),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Json {
        match self {
            Cell::Str(s) => Json::String(s.clone()),
            Cell::Float(x) if x.is_finite() => json!(x),
            Cell::Float(x) => Json::String(format!("{x:?}")),
            Cell::Int(i) => json!(i),
            Cell::Bool(b) => json!(b),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Str(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Str(x)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&'static str]) -> Self {
        Table {
            name: name.to_string(),
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }
}

/// Columns of every aging table.
pub const AGING_COLUMNS: [&str; 10] = ["mode", "alpha", "walk", "theta", "t", "estimate", "ci_lo", "ci_hi", "n_used", "M"];

#[derive(Clone, Debug)]
pub struct Metadata {
    pub version: String,
    pub kind: String,
    pub seed: u64,
    pub config_hash: String,
    pub replicas: u64,
    pub settings: Vec<(String, String)>,
}

impl Metadata {
    fn json(&self) -> Json {
        let settings: Map<String, Json> = self.settings.iter().map(|(k, v)| (k.clone(), Json::String(v.clone()))).collect();
        json!({
            "version": self.version,
            "kind": self.kind,
            "seed": self.seed,
            "config_hash": self.config_hash,
            "replicas": self.replicas,
            "settings": settings,
        })
    }
}

pub fn write_csv(table: &Table, path: &Path) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::csv))?;
    }
    w.flush()
}

pub fn tables_json(meta: &Metadata, tables: &[Table]) -> Json {
    let tabs: Map<String, Json> = tables
        .iter()
        .map(|t| {
            let rows: Vec<Json> = t.rows.iter().map(|r| Json::Array(r.iter().map(Cell::json).collect())).collect();
            (t.name.clone(), json!({ "columns": t.columns, "rows": rows }))
        })
        .collect();
    json!({ "metadata": meta.json(), "tables": tabs })
}

/// Writes one CSV per table and/or a single JSON document; returns the paths.
pub fn write_tables(dir: &Path, meta: &Metadata, tables: &[Table], csv: bool, json: bool) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if csv {
        for t in tables {
            let p = dir.join(format!("{}.csv", t.name));
            write_csv(t, &p)?;
            written.push(p);
        }
    }
    if json {
        let p = dir.join(format!("{}.json", meta.kind));
        let mut text = serde_json::to_string_pretty(&tables_json(meta, tables)).expect("json encoding");
        text.push('\n');
        fs::write(&p, text)?;
        written.push(p);
    }
    Ok(written)
}
