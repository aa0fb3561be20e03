//! File writers. Floats in CSV carry 17 significant digits; JSON uses the
//! shortest representation that round-trips.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

pub const SWEEP_HEADER: [&str; 9] = [
    "lambda",
    "alpha",
    "energy",
    "sigma1",
    "sigma1_sector",
    "m_lambda",
    "r_plus",
    "dalpha_dlambda",
    "residual",
];

/// `x` with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn ensure_dir(dir: &Path) -> std::io::Result<()> {
    fs::create_dir_all(dir)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()
}

/// `<dir>/<stem>_N<dim>_p<p>.<ext>`.
pub fn case_path(dir: &Path, stem: &str, dim: usize, p: f64, ext: &str) -> PathBuf {
    dir.join(format!("{stem}_N{dim}_p{p}.{ext}"))
}
