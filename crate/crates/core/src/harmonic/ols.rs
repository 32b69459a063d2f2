//! Ordinary least squares by Householder QR.
//!
//! The normal-equations route `(X^T X)^{-1} X^T y` is kept alongside as an
//! independent cross-check; production fits never use it.

use super::design::DesignMatrix;
use super::{HarmonicError, Result};

/// Compact Householder factorization of an `m x n` matrix (`m >= n`).
///
/// Column-major. `R` occupies the upper triangle; reflector `k` is stored
/// below the diagonal of column `k` with an implicit unit leading entry.
#[derive(Debug, Clone)]
pub struct HouseholderQr {
    rows: usize,
    cols: usize,
    qr: Vec<f64>,
    tau: Vec<f64>,
    col_norms: Vec<f64>,
}

impl HouseholderQr {
    pub fn factor(x: &DesignMatrix) -> Result<Self> {
        let (m, n) = (x.rows(), x.cols());
        if m < n {
            return Err(HarmonicError::Underdetermined { rows: m, cols: n });
        }
        let mut qr = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                qr[j * m + i] = x.get(i, j);
            }
        }
        let col_norms = (0..n).map(|j| norm(&qr[j * m..(j + 1) * m])).collect();
        let mut tau = vec![0.0; n];

        for k in 0..n {
            let (head, tail) = qr.split_at_mut((k + 1) * m);
            let col = &mut head[k * m..];
            let x_norm = norm(&col[k..]);
            if x_norm == 0.0 {
                continue;
            }
            let alpha = if col[k] > 0.0 { -x_norm } else { x_norm };
            let v0 = col[k] - alpha;
            for v in &mut col[k + 1..] {
                *v /= v0;
            }
            tau[k] = -v0 / alpha;
            col[k] = alpha;

            let v = &col[k + 1..];
            for j in 0..(n - k - 1) {
                let target = &mut tail[j * m..(j + 1) * m];
                let w = target[k] + dot(v, &target[k + 1..]);
                let scale = tau[k] * w;
                target[k] -= scale;
                for (t, vi) in target[k + 1..].iter_mut().zip(v) {
                    *t -= scale * vi;
                }
            }
        }

        Ok(Self {
            rows: m,
            cols: n,
            qr,
            tau,
            col_norms,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Diagonal entry `R[k][k]`.
    pub fn r_diag(&self, k: usize) -> f64 {
        self.qr[k * self.rows + k]
    }

    /// Entry `R[i][j]`, `i <= j`.
    pub fn r(&self, i: usize, j: usize) -> f64 {
        self.qr[j * self.rows + i]
    }

    /// Applies reflector `k` to `y` in place.
    pub fn apply_reflector(&self, k: usize, y: &mut [f64]) {
        let m = self.rows;
        let v = &self.qr[k * m + k + 1..(k + 1) * m];
        let w = y[k] + dot(v, &y[k + 1..]);
        let scale = self.tau[k] * w;
        y[k] -= scale;
        for (yi, vi) in y[k + 1..].iter_mut().zip(v) {
            *yi -= scale * vi;
        }
    }

    /// Overwrites `y` with `Q^T y`.
    pub fn apply_qt(&self, y: &mut [f64]) {
        for k in 0..self.cols {
            self.apply_reflector(k, y);
        }
    }

    /// Solves `R beta = qty[..n]`.
    pub fn back_substitute(&self, qty: &[f64]) -> Vec<f64> {
        let n = self.cols;
        let mut beta = vec![0.0; n];
        for i in (0..n).rev() {
            let mut acc = qty[i];
            for (j, b) in beta.iter().enumerate().skip(i + 1) {
                acc -= self.r(i, j) * b;
            }
            beta[i] = acc / self.r_diag(i);
        }
        beta
    }

    /// `min_k |R_kk| / ||x_k||`: the smallest sine of the angle between a
    /// column and the span of the columns before it. Zero for rank-deficient
    /// input.
    pub fn rcond_estimate(&self) -> f64 {
        (0..self.cols)
            .map(|k| {
                let norm = self.col_norms[k];
                if norm == 0.0 {
                    0.0
                } else {
                    self.r_diag(k).abs() / norm
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn solve(&self, y: &[f64]) -> Vec<f64> {
        let mut qty = y.to_vec();
        self.apply_qt(&mut qty);
        self.back_substitute(&qty)
    }
}

/// A successful least-squares solve.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub beta: Vec<f64>,
    pub rcond: f64,
}

/// Least-squares minimizer of `||y - X beta||`.
pub fn ols_fit(x: &DesignMatrix, y: &[f64], min_conditioning: f64) -> Result<OlsFit> {
    if x.rows() != y.len() {
        return Err(HarmonicError::InvalidInput(format!(
            "design matrix has {} rows but {} observations were given",
            x.rows(),
            y.len()
        )));
    }
    let qr = HouseholderQr::factor(x)?;
    let rcond = qr.rcond_estimate();
    if rcond.is_nan() || rcond < min_conditioning {
        return Err(HarmonicError::IllConditioned { rcond });
    }
    Ok(OlsFit {
        beta: qr.solve(y),
        rcond,
    })
}

/// Solves `(X^T X) beta = X^T y` by Cholesky.
pub fn normal_equations_solve(x: &DesignMatrix, y: &[f64]) -> Result<Vec<f64>> {
    let n = x.cols();
    if x.rows() < n {
        return Err(HarmonicError::Underdetermined {
            rows: x.rows(),
            cols: n,
        });
    }
    let mut gram = vec![0.0; n * n];
    for i in 0..x.rows() {
        let row = x.row(i);
        for a in 0..n {
            for b in 0..=a {
                gram[a * n + b] += row[a] * row[b];
            }
        }
    }
    let rhs = x.transpose_mul_vec(y);

    // lower-triangular factor in place
    for j in 0..n {
        let mut d = gram[j * n + j];
        for k in 0..j {
            d -= gram[j * n + k] * gram[j * n + k];
        }
        if d.is_nan() || d <= 0.0 {
            return Err(HarmonicError::IllConditioned { rcond: 0.0 });
        }
        let d = d.sqrt();
        gram[j * n + j] = d;
        for i in j + 1..n {
            let mut s = gram[i * n + j];
            for k in 0..j {
                s -= gram[i * n + k] * gram[j * n + k];
            }
            gram[i * n + j] = s / d;
        }
    }
    let mut z = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| gram[i * n + k] * z[k]).sum();
        z[i] = (rhs[i] - s) / gram[i * n + i];
    }
    let mut beta = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| gram[k * n + i] * beta[k]).sum();
        beta[i] = (z[i] - s) / gram[i * n + i];
    }
    Ok(beta)
}

/// `||X^T (y - X beta)|| / ||y||`, or the unscaled norm when `y` is zero.
pub fn residual_orthogonality(x: &DesignMatrix, y: &[f64], beta: &[f64]) -> f64 {
    let fitted = x.mul_vec(beta);
    let residual: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let certificate = norm(&x.transpose_mul_vec(&residual));
    let y_norm = norm(y);
    if y_norm == 0.0 {
        certificate
    } else {
        certificate / y_norm
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonic::{build_design_matrix, constituent_frequency, ConstituentSet};

    fn m2() -> ConstituentSet {
        ConstituentSet::from_names(&["M2"]).unwrap()
    }

    #[test]
    fn constant_column_gives_the_mean() {
        let x = DesignMatrix::from_row_major(3, 1, vec![1.0; 3]).unwrap();
        let fit = ols_fit(&x, &[2.0, 2.0, 2.0], 1e-10).unwrap();
        assert!((fit.beta[0] - 2.0).abs() < 1e-15);
        let fit = ols_fit(&x, &[1.0, 2.0, 6.0], 1e-10).unwrap();
        assert!((fit.beta[0] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn exact_recovery_of_a_pure_cosine() {
        let sigma = constituent_frequency("M2").unwrap().frequency;
        let times: Vec<f64> = (0..200).map(f64::from).collect();
        let y: Vec<f64> = times
            .iter()
            .map(|&t| 1.0 + 0.5 * (sigma * t).cos())
            .collect();
        let x = build_design_matrix(&times, &m2(), false).unwrap();
        let beta = ols_fit(&x, &y, 1e-10).unwrap().beta;
        assert!((beta[0] - 1.0).abs() < 1e-9);
        assert!((beta[1] - 0.5).abs() < 1e-9);
        assert!(beta[2].abs() < 1e-9);
    }

    #[test]
    fn duplicate_frequencies_are_ill_conditioned() {
        let sigma = constituent_frequency("M2").unwrap().frequency;
        let mut data = Vec::new();
        for j in 0..50 {
            let t = j as f64;
            data.extend_from_slice(&[1.0, (sigma * t).cos(), (sigma * t).sin()]);
            data.extend_from_slice(&[(sigma * t).cos(), (sigma * t).sin()]);
        }
        let x = DesignMatrix::from_row_major(50, 5, data).unwrap();
        let y = vec![0.3; 50];
        match ols_fit(&x, &y, 1e-10) {
            Err(HarmonicError::IllConditioned { rcond }) => assert!(rcond < 1e-10),
            other => panic!("expected ill-conditioning, got {other:?}"),
        }
    }

    #[test]
    fn fewer_rows_than_columns() {
        let x = DesignMatrix::from_row_major(1, 2, vec![1.0, 0.0]).unwrap();
        assert_eq!(
            ols_fit(&x, &[1.0], 1e-10).unwrap_err(),
            HarmonicError::Underdetermined { rows: 1, cols: 2 }
        );
    }

    #[test]
    fn row_count_mismatch() {
        let x = DesignMatrix::from_row_major(2, 1, vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            ols_fit(&x, &[1.0], 1e-10),
            Err(HarmonicError::InvalidInput(_))
        ));
    }

    #[test]
    fn qr_reproduces_a_small_known_system() {
        // y = 1 + 2 t fitted exactly through three points.
        let x = DesignMatrix::from_row_major(3, 2, vec![1.0, 0.0, 1.0, 1.0, 1.0, 2.0]).unwrap();
        let beta = ols_fit(&x, &[1.0, 3.0, 5.0], 1e-10).unwrap().beta;
        assert!((beta[0] - 1.0).abs() < 1e-14);
        assert!((beta[1] - 2.0).abs() < 1e-14);
        // Non-collinear data: least squares line through (0,0),(1,1),(2,1)
        // is 1/6 + t/2.
        let beta = ols_fit(&x, &[0.0, 1.0, 1.0], 1e-10).unwrap().beta;
        assert!((beta[0] - 1.0 / 6.0).abs() < 1e-14);
        assert!((beta[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn normal_equations_agree_with_qr() {
        let set = ConstituentSet::from_names(&["M2", "K1"]).unwrap();
        let times: Vec<f64> = (0..400).map(|j| j as f64 * 0.5).collect();
        let y: Vec<f64> = times
            .iter()
            .enumerate()
            .map(|(j, &t)| 0.2 + 0.001 * t + (0.5 * t).sin() + ((j * 7919) % 13) as f64 * 0.01)
            .collect();
        let x = build_design_matrix(&times, &set, true).unwrap();
        let qr = ols_fit(&x, &y, 1e-10).unwrap().beta;
        let ne = normal_equations_solve(&x, &y).unwrap();
        let scale = qr.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (a, b) in qr.iter().zip(&ne) {
            assert!((a - b).abs() <= 1e-9 * scale, "{a} vs {b}");
        }
        assert!(residual_orthogonality(&x, &y, &qr) < 1e-8);
    }

    #[test]
    fn rcond_of_orthonormal_columns_is_one() {
        let x = DesignMatrix::from_row_major(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let qr = HouseholderQr::factor(&x).unwrap();
        assert!((qr.rcond_estimate() - 1.0).abs() < 1e-15);
    }
}
