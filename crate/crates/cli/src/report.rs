//! CSV output: a versioned header comment, a timestamp comment (ignored by
//! determinism checks), a column line, then rows.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug)]
pub enum Cell {
    Real(f64),
    Int(u64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Real(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Table {
    pub experiment: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Extra `# key=value` lines after the rows.
    pub summary: Vec<String>,
}

impl Table {
    pub fn new(experiment: &str, columns: &[&'static str]) -> Self {
        Self {
            experiment: experiment.to_string(),
            columns: columns.to_vec(),
            rows: Vec::new(),
            summary: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, timestamp: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# heatpath {} csv v{FORMAT_VERSION}", self.experiment);
        let _ = writeln!(out, "# generated {timestamp}");
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        for line in &self.summary {
            let _ = writeln!(out, "# {line}");
        }
        out
    }

    pub fn write(&self, dir: &Path) -> anyhow::Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.csv", self.experiment));
        let stamp = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
        std::fs::write(&path, self.render(&stamp))?;
        Ok(path)
    }
}

/// Drops the timestamp line, for byte comparison of two runs.
pub fn strip_timestamp(csv: &str) -> String {
    csv.lines()
        .filter(|l| !l.starts_with("# generated "))
        .map(|l| format!("{l}\n"))
        .collect()
}
