//! Dense row-stochastic tables.

use crate::error::{Error, Result};

/// A row-major conditional probability table `p(col | row)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalTable {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ConditionalTable {
    /// Wraps `data` without checking stochasticity; only the shape is checked.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows.checked_mul(cols) != Some(data.len()) {
            return Err(Error::LengthMismatch {
                what: "conditional table",
                expected: rows.saturating_mul(cols),
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::LengthMismatch {
                what: "conditional table row",
                expected: cols,
                found: bad.len(),
            });
        }
        Self::new(n, cols, rows.into_iter().flatten().collect())
    }

    pub(crate) fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub(crate) fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    /// Largest `|sum(row) - 1|` over all rows.
    pub fn max_row_sum_deviation(&self) -> f64 {
        self.iter_rows()
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Errors unless every entry is finite and nonnegative and every row sums
    /// to one within `tol`.
    pub fn check_stochastic(&self, tol: f64) -> Result<()> {
        for (r, row) in self.iter_rows().enumerate() {
            if let Some(c) = row.iter().position(|p| !(p.is_finite() && *p >= 0.0)) {
                return Err(Error::InvalidDistribution(format!(
                    "row {r} column {c} holds {}",
                    row[c]
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > tol {
                return Err(Error::InvalidDistribution(format!(
                    "row {r} sums to {sum}"
                )));
            }
        }
        Ok(())
    }
}

/// Errors unless `p` is a probability vector within `tol`.
pub fn check_distribution(p: &[f64], tol: f64) -> Result<()> {
    if let Some(i) = p.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::InvalidDistribution(format!(
            "entry {i} holds {}",
            p[i]
        )));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(Error::InvalidDistribution(format!("sums to {sum}")));
    }
    Ok(())
}
