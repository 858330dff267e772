//! In-memory CSV tables. Floats use Rust's shortest round-trip formatting, so a table
//! written twice from the same values is byte-identical.

use anyhow::Result;
use helegraph::elliptic::BulkSolution;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    /// File stem; the table is written to `<stem>.csv`.
    pub name: String,
    /// Lines written before the header, each prefixed with `# `.
    pub comments: Vec<String>,
    /// Empty for headerless tables such as bulk fields.
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn num(v: f64) -> String {
    format!("{v}")
}

impl Table {
    pub fn new(name: &str, columns: Vec<String>) -> Self {
        Self {
            name: name.into(),
            comments: Vec::new(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert!(self.columns.is_empty() || row.len() == self.columns.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        for c in &self.comments {
            writeln!(out, "# {c}")?;
        }
        let mut w = csv::WriterBuilder::new().flexible(self.columns.is_empty()).from_writer(out);
        if !self.columns.is_empty() {
            w.write_record(&self.columns)?;
        }
        for r in &self.rows {
            w.write_record(r)?;
        }
        Ok(w.into_inner()?)
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(format!("{}.csv", self.name));
        std::fs::write(&path, self.to_bytes()?)?;
        Ok(path)
    }
}

/// Row-major dump of a flattened bulk field: `# Nx Ny phase`, then one line per row `j`.
pub fn bulk(name: &str, u: &BulkSolution, phase: &str) -> Table {
    let (nx, ny) = (u.problem.nx, u.problem.ny);
    let mut t = Table::new(name, Vec::new());
    t.comments.push(format!("{nx} {ny} {phase}"));
    for j in 0..=ny {
        t.push((0..nx).map(|i| num(u.at(i, j))).collect());
    }
    t
}
