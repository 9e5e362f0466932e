//! Plain-text factor files.
//!
//! Each factor is written densely, one matrix row per line with
//! space-separated values (Rust's shortest round-trip decimal form, so
//! reading a file back gives bit-identical values). A JSON header records
//! the run that produced the factors.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::factors::FactorPair;
use super::fit::{FitConfig, FitReport};
use crate::error::{Error, Result};

pub const W_FILE: &str = "W.txt";
pub const H_FILE: &str = "H.txt";
pub const HEADER_FILE: &str = "factors.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorHeader {
    pub n_rows: usize,
    pub n_cols: usize,
    pub rank: usize,
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub converged: bool,
    pub n_iter: usize,
}

impl FactorHeader {
    pub fn from_fit(factors: &FactorPair, config: &FitConfig, report: &FitReport) -> Self {
        FactorHeader {
            n_rows: factors.n_rows(),
            n_cols: factors.n_cols(),
            rank: factors.rank(),
            alpha: config.prior.alpha(),
            beta: config.prior.beta(),
            epsilon: config.epsilon,
            seed: report.seed,
            converged: report.converged,
            n_iter: report.n_iter,
        }
    }
}

pub fn dense_to_string(matrix: &Array2<f64>) -> String {
    let mut out = String::new();
    for row in matrix.rows() {
        let mut first = true;
        for v in row {
            if !first {
                out.push(' ');
            }
            first = false;
            write!(out, "{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn parse_dense(text: &str) -> Result<Array2<f64>> {
    let mut values = Vec::new();
    let mut n_cols = None;
    let mut n_rows = 0;
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|s| {
                s.parse::<f64>().map_err(|e| Error::Parse {
                    line: idx + 1,
                    message: format!("invalid number {s:?}: {e}"),
                })
            })
            .collect::<Result<_>>()?;
        match n_cols {
            None => n_cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("expected {c} values, found {}", row.len()),
                })
            }
            _ => {}
        }
        values.extend(row);
        n_rows += 1;
    }
    let n_cols = n_cols.unwrap_or(0);
    Array2::from_shape_vec((n_rows, n_cols), values)
        .map_err(|e| Error::Dimension(e.to_string()))
}

pub fn write_dense(path: impl AsRef<Path>, matrix: &Array2<f64>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, dense_to_string(matrix)).map_err(|e| Error::io(path, e))
}

pub fn read_dense(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dense(&text)
}

/// Writes `W.txt`, `H.txt` and `factors.json` into `dir`.
pub fn save_factors(dir: impl AsRef<Path>, factors: &FactorPair, header: &FactorHeader) -> Result<()> {
    let dir = dir.as_ref();
    write_dense(dir.join(W_FILE), &factors.w)?;
    write_dense(dir.join(H_FILE), &factors.h)?;
    let path = dir.join(HEADER_FILE);
    let text = serde_json::to_string_pretty(header)?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

/// Reads factors saved by [`save_factors`]. The header is optional; when
/// present its dimensions must agree with the matrices.
pub fn load_factors(dir: impl AsRef<Path>) -> Result<(FactorPair, Option<FactorHeader>)> {
    let dir = dir.as_ref();
    let w = read_dense(dir.join(W_FILE))?;
    let h = read_dense(dir.join(H_FILE))?;
    let factors = FactorPair::new(w, h)?;
    let header_path = dir.join(HEADER_FILE);
    let header = if header_path.exists() {
        let text = fs::read_to_string(&header_path).map_err(|e| Error::io(&header_path, e))?;
        let header: FactorHeader = serde_json::from_str(&text)?;
        if (header.n_rows, header.n_cols, header.rank)
            != (factors.n_rows(), factors.n_cols(), factors.rank())
        {
            return Err(Error::Dimension(format!(
                "header declares {}x{} rank {}, files hold {}x{} rank {}",
                header.n_rows,
                header.n_cols,
                header.rank,
                factors.n_rows(),
                factors.n_cols(),
                factors.rank()
            )));
        }
        Some(header)
    } else {
        None
    };
    Ok((factors, header))
}
