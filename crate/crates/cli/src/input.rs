//! Series input: newline-delimited decimals, or one CSV column headed `value`.

use std::fmt;
use std::fs;

pub const MIN_LENGTH: usize = 8;

#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

pub fn read_series(path: &str, min_len: usize) -> Result<Vec<f64>, InputError> {
    let text = if path == "-" {
        std::io::read_to_string(std::io::stdin())
    } else {
        fs::read_to_string(path)
    }
    .map_err(|e| InputError(format!("cannot read {path}: {e}")))?;
    parse_series(&text, min_len)
}

pub fn parse_series(text: &str, min_len: usize) -> Result<Vec<f64>, InputError> {
    let mut out = Vec::new();
    let mut seen_content = false;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !seen_content {
            seen_content = true;
            if line.eq_ignore_ascii_case("value") {
                continue;
            }
        }
        let v: f64 = line
            .parse()
            .map_err(|_| InputError(format!("line {}: not a number: `{line}`", i + 1)))?;
        if !v.is_finite() {
            return Err(InputError(format!("line {}: non-finite value `{line}`", i + 1)));
        }
        out.push(v);
    }
    if out.len() < min_len {
        return Err(InputError(format!(
            "series has {} values; at least {min_len} are needed",
            out.len()
        )));
    }
    Ok(out)
}
