//! CSV and text outputs. Every float is written with 17 significant digits.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

/// `v` in scientific notation with 17 significant digits.
pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Empty cell for a missing value.
pub fn opt_float(v: Option<f64>) -> String {
    v.map(float).unwrap_or_default()
}

/// Writes `rows` under `header` to `dir/name` and returns the path.
pub fn write_csv<I>(dir: &Path, name: &str, header: &[&str], rows: I) -> Result<PathBuf>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let path = dir.join(name);
    let io = |e: csv::Error| CliError::io(&path, e.into());
    let mut w = csv::Writer::from_path(&path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(float(0.1), "1.0000000000000001e-1");
        assert_eq!(float(-2.0), "-2.0000000000000000e0");
        for v in [std::f64::consts::PI, 1e-300, -7.25e12, 0.0] {
            assert_eq!(float(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(opt_float(None), "");
    }

    #[test]
    fn csv_has_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_csv(dir.path(), "a.csv", &["x", "u"], vec![vec![float(1.0), float(0.5)]]).unwrap();
        let text = fs::read_to_string(p).unwrap();
        assert_eq!(text, "x,u\n1.0000000000000000e0,5.0000000000000000e-1\n");
    }
}
