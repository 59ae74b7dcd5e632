//! Two-column numeric text files.
//!
//! Columns are separated by whitespace or a comma. Blank lines and text
//! after `#` are ignored, and the first remaining line may be a header.

use std::fs;
use std::path::Path;

use crate::error::{CliError, Result};

/// Reads `(x, y)` rows from `path`; errors name `field`.
pub fn read_columns(path: &Path, field: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_columns(&text).map_err(|m| CliError::config(format!("{field}: {}: {m}", path.display())))
}

pub fn parse_columns(text: &str) -> Result<(Vec<f64>, Vec<f64>), String> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut seen_line = false;
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let first = !seen_line;
        seen_line = true;
        let cells: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        let parsed: Option<Vec<f64>> = cells.iter().map(|c| c.parse().ok()).collect();
        match parsed {
            Some(v) if v.len() == 2 => {
                xs.push(v[0]);
                ys.push(v[1]);
            }
            None if first => continue,
            _ => return Err(format!("line {}: expected two numbers", i + 1)),
        }
    }
    if xs.len() < 2 {
        return Err("needs at least two rows".into());
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err("first column must be strictly increasing".into());
    }
    Ok((xs, ys))
}
