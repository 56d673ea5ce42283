//! Flat `key = value` config files merged into the argument list.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("config line {}: expected `key = value`, got `{}`", i + 1, raw.trim());
        };
        let key = k.trim();
        if key.is_empty() || key.contains(char::is_whitespace) {
            bail!("config line {}: bad key `{}`", i + 1, key);
        }
        out.push((key.replace('_', "-"), v.trim().to_string()));
    }
    Ok(out)
}

/// Inserts `--key value` for every config entry whose flag is absent from
/// `args`, so explicit flags win. `true` / `false` values toggle switches.
pub fn expand(args: Vec<String>) -> Result<Vec<String>> {
    let Some(pos) = args.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(args);
    };
    let path = match args[pos].strip_prefix("--config=") {
        Some(p) => p.to_string(),
        None => args
            .get(pos + 1)
            .cloned()
            .context("--config needs a path")?,
    };
    let text = fs::read_to_string(Path::new(&path)).with_context(|| format!("reading config {path}"))?;
    let entries = parse(&text)?;
    let mut out = args;
    let present = |out: &[String], key: &str| {
        let flag = format!("--{key}");
        out.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")))
    };
    let mut extra = Vec::new();
    for (key, value) in entries {
        if key == "config" || present(&out, &key) {
            continue;
        }
        match value.as_str() {
            "true" => extra.push(format!("--{key}")),
            "false" => {}
            _ => extra.push(format!("--{key}={value}")),
        }
    }
    // config flags go right after the subcommand so positional input stays last
    let at = if out.len() > 1 { 2 } else { out.len() };
    let tail = out.split_off(at.min(out.len()));
    out.extend(extra);
    out.extend(tail);
    Ok(out)
}
