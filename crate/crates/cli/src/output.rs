//! Atomic, reproducible output files.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tempfile::NamedTempFile;

use crate::error::CliError;

/// A column value in a CSV row.
#[derive(Debug, Clone)]
pub enum Cell {
    Num(f64),
    Opt(Option<f64>),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        Cell::Opt(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.into())
    }
}

/// 17 significant digits; non-finite values spelled out, missing as empty.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => fmt_num(*x),
            Cell::Opt(Some(x)) => fmt_num(*x),
            Cell::Opt(None) => String::new(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> serde_json::Value {
        let num = |x: f64| serde_json::Number::from_f64(x).map_or(serde_json::Value::Null, Into::into);
        match self {
            Cell::Num(x) | Cell::Opt(Some(x)) => num(*x),
            Cell::Opt(None) => serde_json::Value::Null,
            Cell::Text(s) => s.clone().into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(Cell::render).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|r| {
                let obj: serde_json::Map<_, _> = self
                    .header
                    .iter()
                    .zip(r)
                    .map(|(h, c)| (h.to_string(), c.json()))
                    .collect();
                obj.into()
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&rows).expect("rows serialize");
        s.push('\n');
        s
    }
}

/// Write-then-rename so a crash never leaves a truncated file behind.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(&dir.display().to_string(), e))?;
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| CliError::io("temp file", e))?;
    tmp.write_all(contents).map_err(|e| CliError::io("write", e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io("sync", e))?;
    tmp.persist(path)
        .map_err(|e| CliError::io(&path.display().to_string(), e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::validation("serialize", e.to_string()))?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

/// Collects output files under one directory and remembers what was written.
#[derive(Debug)]
pub struct Sink {
    pub dir: PathBuf,
    pub format: crate::config::Format,
    pub written: Vec<PathBuf>,
}

impl Sink {
    pub fn new(dir: PathBuf, format: crate::config::Format) -> Self {
        Self {
            dir,
            format,
            written: Vec::new(),
        }
    }

    /// Writes `stem.csv` or `stem.json` depending on the format.
    pub fn table(&mut self, stem: &str, t: &Table) -> Result<(), CliError> {
        let (name, body) = match self.format {
            crate::config::Format::Csv => (format!("{stem}.csv"), t.to_csv()),
            crate::config::Format::Json => (format!("{stem}.json"), t.to_json()),
        };
        let path = self.dir.join(name);
        write_atomic(&path, body.as_bytes())?;
        self.written.push(path);
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let path = self.dir.join(name);
        write_json(&path, value)?;
        self.written.push(path);
        Ok(())
    }
}

/// Stable file-name tag for a coupling, e.g. `1.5` → `1p5`.
pub fn tag(x: f64) -> String {
    let s = format!("{x}");
    s.replace('.', "p").replace('-', "m")
}
