//! CSV and JSON writers. CSV gets a header row, '.' decimals, and
//! scientific notation at full double precision (the shortest digits
//! that round-trip); JSON is pretty-printed with a fixed field order so
//! reruns are byte-identical.

use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

/// Scientific-notation cell for a CSV table.
pub fn sci(x: f64) -> String {
    format!("{x:e}")
}

pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sci_round_trips() {
        for x in [1.0, -2.5e-7, 9.4e-16, 1.94e13, f64::MIN_POSITIVE] {
            assert_eq!(sci(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(sci(f64::INFINITY), "inf");
    }
}
