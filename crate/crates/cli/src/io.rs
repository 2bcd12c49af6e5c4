//! Deterministic JSON and CSV output.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::Formatter;
use serde_json::Value;

use crate::error::CliError;

/// Compact JSON with every float written as `{:.16e}` (17 significant digits).
struct FixedFloats;

impl Formatter for FixedFloats {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{}", float(value))
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(value))
    }
}

/// The text form of a float shared by JSON and CSV.
pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Serialize with sorted object keys and fixed float formatting.
pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    // `Value` objects are ordered maps, so a round trip through it sorts keys.
    let tree: Value = serde_json::to_value(value).map_err(|e| CliError::Numeric(e.to_string()))?;
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedFloats);
    tree.serialize(&mut ser).map_err(|e| CliError::Numeric(e.to_string()))?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}

/// A CSV table with string cells.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let fail = |e: csv::Error| CliError::Numeric(e.to_string());
        w.write_record(&self.header).map_err(fail)?;
        for row in &self.rows {
            w.write_record(row).map_err(fail)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Numeric(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("cells are UTF-8"))
    }
}

/// Write to `path`, or to stdout when absent.
pub fn emit(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    let io_err = |e: io::Error| CliError::Input(format!("cannot write output: {e}"));
    match path {
        Some(p) => {
            let mut f = BufWriter::new(File::create(p).map_err(io_err)?);
            f.write_all(text.as_bytes()).map_err(io_err)?;
            f.flush().map_err(io_err)
        }
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(io_err)?;
            out.flush().map_err(io_err)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn keys_are_sorted_and_floats_fixed() {
        let s = to_json(&json!({"b": 1.0, "a": [0.1, -2.5e-7], "n": 3})).unwrap();
        assert_eq!(s, "{\"a\":[1.0000000000000001e-1,-2.4999999999999999e-7],\"b\":1.0000000000000000e0,\"n\":3}\n");
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["a"][0].as_f64(), Some(0.1));
        assert_eq!(back["a"][1].as_f64(), Some(-2.5e-7));
        assert_eq!("-2.4999999999999999e-7".parse::<f64>(), Ok(-2.5e-7));
    }

    #[test]
    fn non_finite_floats_become_null() {
        assert_eq!(to_json(&json!([f64::NAN])).unwrap(), "[null]\n");
    }

    #[test]
    fn csv_table() {
        let mut t = Table::new(&["x", "y"]);
        t.push(vec!["1".into(), float(0.5)]);
        assert_eq!(t.to_csv().unwrap(), "x,y\n1,5.0000000000000000e-1\n");
    }
}
