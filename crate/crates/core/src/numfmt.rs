//! Fixed-precision numeric output.
//!
//! Every number written by the crate uses 17 significant digits in scientific
//! notation, which round-trips any `f64` exactly and makes byte-level
//! determinism checks meaningful.

use std::io;

use serde::Serialize;

/// Formats `x` with 17 significant digits, e.g. `-1.7000000000000001e-2`.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// `fmt17` for optional values, rendering `None` as `N/A`.
pub fn fmt17_opt(x: Option<f64>) -> String {
    x.map(fmt17).unwrap_or_else(|| "N/A".to_string())
}

/// JSON formatter writing floats through [`fmt17`].
#[derive(Debug, Default, Clone, Copy)]
pub struct Fixed17;

impl serde_json::ser::Formatter for Fixed17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt17(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Serializes `value` as JSON with 17-significant-digit floats.
pub fn to_json_17<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Fixed17);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}
