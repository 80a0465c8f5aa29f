//! Plot-ready CSV and JSON output.
//!
//! Reals are written in scientific notation with 12 significant digits
//! (`1.23456789012e-1`), complex numbers as `re+imi` with the same precision.
//! Output depends only on the values, so identical inputs give identical bytes.

use num_complex::Complex64;
use serde::Serialize;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Real(f64),
    Int(i64),
    Complex(Complex64),
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Real(v)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as i64)
    }
}

impl From<Complex64> for Value {
    fn from(v: Complex64) -> Self {
        Value::Complex(v)
    }
}

pub fn format_real(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.11e}")
    } else {
        v.to_string()
    }
}

impl Value {
    pub fn render(&self) -> String {
        match *self {
            Value::Real(v) => format_real(v),
            Value::Int(v) => v.to_string(),
            Value::Complex(z) => format!("{:.11e}{:+.11e}i", z.re, z.im),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::InvalidInput(format!(
                "row has {} values but the table has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn write_to(&self, out: &mut (impl Write + ?Sized)) -> io::Result<()> {
        writeln!(out, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Value::render).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }
}

fn with_output(
    path: Option<&Path>,
    write: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> Result<()> {
    let result = match path {
        Some(path) => {
            let file =
                File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let mut out = BufWriter::new(file);
            write(&mut out).and_then(|_| out.flush())
        }
        None => {
            let stdout = io::stdout();
            let mut out = stdout.lock();
            write(&mut out).and_then(|_| out.flush())
        }
    };
    result.map_err(Error::from)
}

/// Write `table` to `path`, or to stdout when `path` is `None`.
pub fn emit_csv(table: &Table, path: Option<&Path>) -> Result<()> {
    with_output(path, |out| table.write_to(out))
}

pub fn emit_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    with_output(path, |out| writeln!(out, "{text}"))
}

/// Parse one rendered cell back into a number.
pub fn parse_value(cell: &str) -> Option<Value> {
    if let Some(body) = cell.strip_suffix('i') {
        // the imaginary part starts at the last sign not directly after an exponent marker
        let bytes = body.as_bytes();
        let split = (1..bytes.len())
            .rev()
            .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && bytes[i - 1] != b'e')?;
        let re = body[..split].parse().ok()?;
        let im = body[split..].parse().ok()?;
        return Some(Value::Complex(Complex64::new(re, im)));
    }
    if let Ok(v) = cell.parse::<i64>() {
        return Some(Value::Int(v));
    }
    cell.parse::<f64>().ok().map(Value::Real)
}

/// Parse CSV text produced by [`Table::write_to`].
pub fn parse_csv(text: &str) -> Result<Table> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidInput("empty CSV".into()))?;
    let mut table = Table::new(header.split(','));
    for line in lines {
        let row = line
            .split(',')
            .map(|cell| {
                parse_value(cell)
                    .ok_or_else(|| Error::InvalidInput(format!("bad CSV cell '{cell}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        table.push(row)?;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_real(0.1), "1.00000000000e-1");
        assert_eq!(format_real(-13.693_911_740_212_995), "-1.36939117402e1");
        assert_eq!(format_real(0.0), "0.00000000000e0");
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = Table::new(["r_sq", "r_nm1_sq", "q_ext", "q_r"]);
        assert_eq!(t.to_csv_string(), "r_sq,r_nm1_sq,q_ext,q_r\n");
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let mut t = Table::new(["a", "b"]);
        assert!(t.push(vec![Value::Real(1.0)]).is_err());
    }

    #[test]
    fn complex_cells_round_trip() {
        let z = Complex64::new(-1.25e-7, 3.5);
        let cell = Value::Complex(z).render();
        assert_eq!(cell, "-1.25000000000e-7+3.50000000000e0i");
        assert_eq!(parse_value(&cell), Some(Value::Complex(z)));
    }

    #[test]
    fn unwritable_path_is_an_error() {
        let t = Table::new(["a"]);
        let err = emit_csv(&t, Some(Path::new("/nonexistent-dir/x/out.csv"))).unwrap_err();
        assert!(matches!(err, Error::Io(_)));
    }
}
