use super::types::ConstituentSet;
use super::{HarmonicError, Result};

/// Row-major regression matrix, one observation per row:
/// `[1, t, cos(s1 t), sin(s1 t), ..., cos(sN t), sin(sN t)]`
/// (the `t` column is absent without a trend).
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DesignMatrix {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(HarmonicError::InvalidInput(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `X beta`.
    pub fn mul_vec(&self, beta: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(beta).map(|(x, b)| x * b).sum())
            .collect()
    }

    /// `X^T v`.
    pub fn transpose_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate().take(self.rows) {
            for (o, x) in out.iter_mut().zip(self.row(i)) {
                *o += x * vi;
            }
        }
        out
    }
}

pub fn build_design_matrix(
    times: &[f64],
    constituents: &ConstituentSet,
    include_trend: bool,
) -> Result<DesignMatrix> {
    if times.is_empty() {
        return Err(HarmonicError::InvalidInput("no sample times".to_string()));
    }
    if let Some(bad) = times.iter().find(|t| !t.is_finite()) {
        return Err(HarmonicError::InvalidInput(format!(
            "non-finite sample time {bad}"
        )));
    }
    let cols = 1 + usize::from(include_trend) + 2 * constituents.len();
    let mut data = Vec::with_capacity(times.len() * cols);
    for &t in times {
        data.push(1.0);
        if include_trend {
            data.push(t);
        }
        for c in constituents.members() {
            let (s, co) = (c.frequency * t).sin_cos();
            data.push(co);
            data.push(s);
        }
    }
    DesignMatrix::from_row_major(times.len(), cols, data)
}
