//! Deterministic CSV emission with a versioned schema comment.

use std::io::Write;

use crate::error::Result;

pub const SCHEMA_VERSION: u32 = 1;

/// Fixed 17-significant-digit formatting; infinities as `inf`.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

pub fn flag(b: bool) -> String {
    b.to_string()
}

pub struct Table {
    pub command: &'static str,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(command: &'static str, header: Vec<String>) -> Self {
        Self { command, header, rows: Vec::new() }
    }

    pub fn write(&self, out: impl Write) -> Result<()> {
        let mut out = out;
        writeln!(out, "# sharp-parabolic {} schema v{SCHEMA_VERSION}", self.command)?;
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Column names `prefix_1 … prefix_k`.
pub fn indexed(prefix: &str, k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("{prefix}_{i}")).collect()
}

/// Column names `prefix_11 … prefix_kk`, row-major.
pub fn indexed2(prefix: &str, k: usize) -> Vec<String> {
    (1..=k).flat_map(|i| (1..=k).map(move |j| format!("{prefix}_{i}{j}"))).collect()
}
