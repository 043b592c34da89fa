//! Tables, CSV and plot files. Every file starts with a comment line naming
//! the scenario hash, followed by the column header.

use std::fmt;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::RunError;

pub fn scenario_hash(bytes: &[u8]) -> String {
    let d = Sha256::digest(bytes);
    d.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // Shortest round-trip representation: deterministic and exact.
            Cell::F(x) => write!(f, "{x:e}"),
            Cell::I(i) => write!(f, "{i}"),
            Cell::S(s) => f.write_str(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::I(x as i64)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::I(x)
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::S(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    pub fn to_csv(&self, hash: &str) -> Result<Vec<u8>, RunError> {
        let mut out = format!("# scenario_sha256={hash}\n").into_bytes();
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(&self.columns).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.to_string())).map_err(io)?;
        }
        w.flush().map_err(|e| RunError::Io(e.to_string()))?;
        drop(w);
        Ok(out)
    }
}

fn io(e: csv::Error) -> RunError {
    RunError::Io(e.to_string())
}

/// Whitespace-separated columns for external plotting tools.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotData {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn emit_plot_data(name: &str, columns: &[&str], rows: Vec<Vec<f64>>) -> Result<PlotData, RunError> {
    if rows.is_empty() {
        return Err(RunError::Numeric(format!("plot data `{name}` is empty")));
    }
    if rows.iter().any(|r| r.len() != columns.len()) {
        return Err(RunError::Numeric(format!("plot data `{name}` has ragged rows")));
    }
    Ok(PlotData {
        name: name.into(),
        columns: columns.iter().map(|c| c.to_string()).collect(),
        rows,
    })
}

impl PlotData {
    pub fn render(&self, hash: &str) -> String {
        let mut s = format!("# scenario_sha256={hash}\n# {}\n", self.columns.join(" "));
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(|x| format!("{x:e}")).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }
}

/// Writes `files` into `dir` only after all of them are staged, so a failed
/// run leaves no partial output.
pub fn commit_files(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<(), RunError> {
    std::fs::create_dir_all(dir).map_err(|e| RunError::Io(format!("{}: {e}", dir.display())))?;
    let staging = dir.join(format!(".magheat-staging-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&staging);
    std::fs::create_dir_all(&staging).map_err(|e| RunError::Io(e.to_string()))?;
    let result = (|| {
        for (name, bytes) in files {
            std::fs::write(staging.join(name), bytes).map_err(|e| RunError::Io(format!("{name}: {e}")))?;
        }
        for (name, _) in files {
            std::fs::rename(staging.join(name), dir.join(name)).map_err(|e| RunError::Io(format!("{name}: {e}")))?;
        }
        Ok(())
    })();
    let _ = std::fs::remove_dir_all(&staging);
    result
}
