//! Output encoding: JSON records and CSV tables with floating-point
//! values printed as 17 significant digits so outputs diff cleanly.

use std::io;

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter, Serializer};
use serde_json::Value;

struct SciFormatter;

impl Formatter for SciFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{}", fmt_f64(value))
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        CompactFormatter.write_f32(writer, value)
    }
}

/// 17 significant digits, scientific notation.
pub fn fmt_f64(value: f64) -> String {
    format!("{value:.16e}")
}

/// Serialize a record to a single JSON line.
pub fn to_json_line(value: &Value) -> String {
    let mut buf = Vec::new();
    let mut ser = Serializer::with_formatter(&mut buf, SciFormatter);
    value
        .serialize(&mut ser)
        .expect("JSON serialization cannot fail");
    let mut out = String::from_utf8(buf).expect("serializer emits UTF-8");
    out.push('\n');
    out
}

/// Flatten the scalar fields of a record into a one-row CSV document.
pub fn record_to_csv(value: &Value) -> String {
    let obj = value.as_object().expect("records are JSON objects");
    let mut header = Vec::new();
    let mut row = Vec::new();
    for (k, v) in obj {
        let cell = match v {
            Value::Null | Value::Array(_) | Value::Object(_) => continue,
            Value::Number(n) => match n.as_f64() {
                Some(f) if !n.is_i64() && !n.is_u64() => fmt_f64(f),
                _ => n.to_string(),
            },
            Value::Bool(b) => b.to_string(),
            Value::String(s) => s.clone(),
        };
        header.push(k.clone());
        row.push(cell);
    }
    format!("{}\n{}\n", header.join(","), row.join(","))
}

/// Assemble a CSV table from a header and float-heavy rows.
pub fn csv_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
