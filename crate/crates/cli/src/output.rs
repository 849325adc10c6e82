//! Flat-file writers. Numbers use the shortest representation that parses
//! back to the same `f64`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

pub fn format_number(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// A CSV table with a fixed header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self {
            header: header.iter().map(|s| s.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Index of a column by name.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for (i, row) in self.rows.iter().enumerate() {
            let mut rec = Vec::with_capacity(row.len());
            for (cell, name) in row.iter().zip(&self.header) {
                rec.push(match cell {
                    Cell::Num(x) if !x.is_finite() => {
                        return Err(CliError::Numerical(format!(
                            "non-finite value in column `{name}`, row {i} of {}",
                            path.display()
                        )))
                    }
                    Cell::Num(x) => format_number(*x),
                    Cell::Int(n) => n.to_string(),
                    Cell::Text(s) => s.clone(),
                });
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let v = serde_json::to_value(value)?;
    check_finite(&v, path)?;
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, &v)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

// serde_json maps NaN and infinities to null.
fn check_finite(v: &serde_json::Value, path: &Path) -> Result<(), CliError> {
    match v {
        serde_json::Value::Null => Err(CliError::Numerical(format!(
            "non-finite value in {}",
            path.display()
        ))),
        serde_json::Value::Array(a) => a.iter().try_for_each(|x| check_finite(x, path)),
        serde_json::Value::Object(o) => o.values().try_for_each(|x| check_finite(x, path)),
        _ => Ok(()),
    }
}

/// Output directory plus the scenario's file-name prefix.
#[derive(Debug, Clone)]
pub struct OutDir {
    root: PathBuf,
    prefix: String,
}

impl OutDir {
    pub fn create(root: &Path, prefix: &str) -> Result<Self, CliError> {
        std::fs::create_dir_all(root)
            .map_err(|e| CliError::Io(format!("{}: {e}", root.display())))?;
        Ok(Self {
            root: root.to_path_buf(),
            prefix: prefix.to_string(),
        })
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.root.join(format!("{}{name}", self.prefix))
    }
}
