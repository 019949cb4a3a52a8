//! Data ingestion and synthetic data.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Parses comma-separated numeric rows without a header. Blank lines are
/// skipped; row numbers in errors are 1-based line numbers.
pub fn parse_csv(text: &str) -> Result<DenseMatrix> {
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = lineno + 1;
        let mut count = 0;
        for tok in line.split(',') {
            let tok = tok.trim();
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::MalformedCsv { row, reason: format!("not a number: {tok:?}") })?;
            if !v.is_finite() {
                return Err(Error::MalformedCsv { row, reason: format!("non-finite value {tok:?}") });
            }
            data.push(v);
            count += 1;
        }
        match cols {
            None => cols = Some(count),
            Some(c) if c != count => {
                return Err(Error::MalformedCsv { row, reason: format!("expected {c} fields, found {count}") });
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = cols.ok_or(Error::MalformedCsv { row: 0, reason: "no data rows".into() })?;
    DenseMatrix::from_row_major(rows, cols, data)
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    parse_csv(&std::fs::read_to_string(path)?)
}

/// Round-trippable CSV text.
pub fn to_csv(m: &DenseMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        for (k, v) in m.row(i).iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            write!(out, "{v:?}").expect("writing to a String");
        }
        out.push('\n');
    }
    out
}

/// An `m × n` matrix of standard normal entries, deterministic per seed.
pub fn gen_randn(m: usize, n: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DenseMatrix::from_fn(m, n, |_, _| rng.sample(StandardNormal))
}

/// `AᵀA`, symmetric by construction.
pub fn covariance(a: &DenseMatrix) -> DenseMatrix {
    let c = a.tr_matmul(a).expect("AᵀA is always defined");
    let n = c.rows();
    DenseMatrix::from_fn(n, n, |i, j| if i <= j { c[(i, j)] } else { c[(j, i)] })
}
