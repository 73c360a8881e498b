//! Machine-readable output helpers: every floating-point number is written
//! with 17 significant digits so parsed doubles round-trip exactly.

use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::Result;

/// 17-significant-digit scientific rendering of a double.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// JSON formatter that renders floats with 17 significant digits.
struct F17(serde_json::ser::CompactFormatter);

impl serde_json::ser::Formatter for F17 {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        write!(writer, "{value:.8e}")
    }
}

/// Serializes to compact JSON with round-trippable floats.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut buf, F17(serde_json::ser::CompactFormatter));
    value
        .serialize(&mut ser)
        .map_err(|e| crate::error::QsdError::Config(format!("serialize: {e}")))?;
    Ok(String::from_utf8(buf).expect("json is utf-8"))
}

/// Writes a value as JSON (with a trailing newline) to `path`.
pub fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = to_json_string(value)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}
