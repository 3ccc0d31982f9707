//! Deterministic text formats shared by every artifact writer.

use std::io::{self, Write};

/// Scientific notation with 17 significant digits, which round-trips `f64`.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// JSON number carrying the same 17-digit text as the CSV files.
pub fn json_float(v: f64) -> serde_json::Value {
    if !v.is_finite() {
        return serde_json::Value::Null;
    }
    serde_json::Value::Number(fmt_float(v).parse().expect("formatted float is a valid JSON number"))
}

/// Minimal CSV writer: fixed header, LF line endings, no quoting (fields
/// are numbers or bare identifiers).
pub struct CsvWriter<W: Write> {
    out: W,
    columns: usize,
}

impl<W: Write> CsvWriter<W> {
    pub fn new(mut out: W, header: &[&str]) -> io::Result<Self> {
        writeln!(out, "{}", header.join(","))?;
        Ok(Self { out, columns: header.len() })
    }

    pub fn row(&mut self, fields: &[String]) -> io::Result<()> {
        debug_assert_eq!(fields.len(), self.columns);
        writeln!(self.out, "{}", fields.join(","))
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

/// `serde_json` pretty printer with a trailing newline.
pub fn write_json<W: Write>(mut out: W, value: &serde_json::Value) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")
}
