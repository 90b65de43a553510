//! Deterministic report writers. Every file starts with a schema tag and
//! version; no timestamps are written, so identical inputs give identical
//! bytes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct Header<'a, C: Serialize> {
    pub schema: String,
    pub version: u32,
    pub command: &'a str,
    pub config: &'a C,
}

pub fn header<'a, C: Serialize>(kind: &str, command: &'a str, config: &'a C) -> Header<'a, C> {
    Header { schema: format!("ancientflow.{kind}"), version: SCHEMA_VERSION, command, config }
}

/// Writes the files of one command into an optional output directory.
#[derive(Clone, Debug)]
pub struct Sink {
    dir: Option<PathBuf>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

impl Sink {
    pub fn new(dir: Option<PathBuf>) -> Result<Self, CliError> {
        if let Some(d) = &dir {
            fs::create_dir_all(d).map_err(|e| io_err(d, e))?;
        }
        Ok(Self { dir })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn path(&self, name: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(name))
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        if let Some(path) = self.path(name) {
            fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
        }
        Ok(())
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        if self.dir.is_none() {
            return Ok(());
        }
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    /// One JSON header line followed by one line per record.
    pub fn jsonl<H: Serialize, R: Serialize>(&self, name: &str, head: &H, records: &[R]) -> Result<(), CliError> {
        if self.dir.is_none() {
            return Ok(());
        }
        let json_err = |e: serde_json::Error| CliError::Io(e.to_string());
        let mut buf = Vec::new();
        serde_json::to_writer(&mut buf, head).map_err(json_err)?;
        buf.push(b'\n');
        for r in records {
            serde_json::to_writer(&mut buf, r).map_err(json_err)?;
            buf.push(b'\n');
        }
        self.write(name, &buf)
    }

    /// CSV with `# key=value` comment lines documenting the constants used.
    pub fn csv(&self, name: &str, table: &Table) -> Result<(), CliError> {
        if self.dir.is_none() {
            return Ok(());
        }
        let mut buf = Vec::new();
        writeln!(buf, "# schema=ancientflow.{} version={SCHEMA_VERSION}", table.kind).expect("in-memory write");
        for (k, v) in &table.constants {
            writeln!(buf, "# {k}={v}").expect("in-memory write");
        }
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            let csv_err = |e: csv::Error| CliError::Io(e.to_string());
            w.write_record(&table.columns).map_err(csv_err)?;
            for row in &table.rows {
                w.write_record(row).map_err(csv_err)?;
            }
            w.flush().map_err(|e| CliError::Io(e.to_string()))?;
        }
        self.write(name, &buf)
    }
}

/// A CSV table held as formatted strings.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub kind: String,
    pub constants: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(kind: &str, columns: &[&str]) -> Self {
        Self { kind: kind.into(), columns: columns.iter().map(|c| c.to_string()).collect(), ..Self::default() }
    }

    pub fn constant(mut self, key: &str, value: impl std::fmt::Display) -> Self {
        self.constants.push((key.into(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Shortest round-trip formatting of a float.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}
