//! Plain-text output helpers shared by the library and the CLI.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;

/// Scientific notation with `digits` digits after the point and a signed
/// two-digit exponent, e.g. `4.91000e-03`.
pub fn format_sci(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.digits$e}");
    let (mant, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mant}e{sign}{:02}", exp.abs())
}

/// Table format used in CSV files: six significant digits.
pub fn sci(x: f64) -> String {
    format_sci(x, 5)
}

/// One `id value` row per element.
pub fn field_text(values: &[f64]) -> String {
    let mut out = String::new();
    for (i, v) in values.iter().enumerate() {
        let _ = writeln!(out, "{i} {}", format_sci(*v, 12));
    }
    out
}

pub fn write_field(path: &Path, values: &[f64]) -> Result<()> {
    std::fs::write(path, field_text(values))?;
    Ok(())
}

/// `key=value` lines, in the given order.
pub fn key_value_text(entries: &[(String, String)]) -> String {
    let mut out = String::new();
    for (k, v) in entries {
        let _ = writeln!(out, "{k}={v}");
    }
    out
}
