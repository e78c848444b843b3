//! Small dense linear algebra: a column-major matrix and a Householder
//! least-squares solver that drops linearly dependent columns in order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense column-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        DenseMatrix {
            n_rows,
            n_cols,
            data: vec![0.0; n_rows * n_cols],
        }
    }

    /// Builds a matrix from columns of equal length.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let n_rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n_rows) {
            return Err(Error::InvalidInput("columns have unequal lengths".into()));
        }
        Ok(DenseMatrix {
            n_rows,
            n_cols: columns.len(),
            data: columns.concat(),
        })
    }

    /// Builds a matrix from row-major rows of equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::InvalidInput("rows have unequal lengths".into()));
        }
        let mut m = DenseMatrix::zeros(rows.len(), n_cols);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        Ok(m)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.n_rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.n_rows + i] = v;
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.n_rows..(j + 1) * self.n_rows]
    }

    #[inline]
    pub fn column_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.n_rows..(j + 1) * self.n_rows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.n_cols).map(move |j| self.column(j))
    }

    pub fn select_rows(&self, rows: &[usize]) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(rows.len(), self.n_cols);
        for j in 0..self.n_cols {
            let src = self.column(j);
            for (dst, &i) in out.column_mut(j).iter_mut().zip(rows) {
                *dst = src[i];
            }
        }
        out
    }

    pub fn select_columns(&self, cols: &[usize]) -> DenseMatrix {
        let mut data = Vec::with_capacity(self.n_rows * cols.len());
        for &j in cols {
            data.extend_from_slice(self.column(j));
        }
        DenseMatrix {
            n_rows: self.n_rows,
            n_cols: cols.len(),
            data,
        }
    }

    /// `X * beta`.
    pub fn mul_vec(&self, beta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_rows];
        for (j, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                for (o, &x) in out.iter_mut().zip(self.column(j)) {
                    *o += b * x;
                }
            }
        }
        out
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample variance with the n-1 denominator.
pub(crate) fn sample_variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() as f64 - 1.0)
}

/// Relative size below which a column counts as dependent on earlier ones.
const RANK_TOL: f64 = 1e-9;

/// Least-squares fit of `y` on a sequence of regressors.
#[derive(Debug, Clone)]
pub(crate) struct LeastSquares {
    /// Indices (into the regressor list) that were kept, in order.
    pub kept: Vec<usize>,
    /// Indices that were linearly dependent on earlier regressors.
    pub dropped: Vec<usize>,
    /// Coefficients for `kept`.
    pub coefficients: Vec<f64>,
    /// Diagonal of `(X_kept^T X_kept)^{-1}`.
    pub xtx_inv_diag: Vec<f64>,
    pub rss: f64,
}

/// Householder QR least squares. Regressors are processed in order and a
/// regressor whose component orthogonal to the already kept ones is
/// negligible is dropped, so the lowest-index member of a dependent set
/// survives.
pub(crate) fn least_squares(regressors: &[&[f64]], y: &[f64]) -> Result<LeastSquares> {
    let n = y.len();
    if regressors.iter().any(|c| c.len() != n) {
        return Err(Error::InvalidInput("regressor length differs from response length".into()));
    }
    let mut reflectors: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut r_cols: Vec<Vec<f64>> = Vec::new();
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    let mut qty = y.to_vec();

    for (idx, col) in regressors.iter().enumerate() {
        let k = reflectors.len();
        let orig_norm = dot(col, col).sqrt();
        let mut a = col.to_vec();
        for (v, beta) in &reflectors {
            apply_reflector(v, *beta, &mut a);
        }
        let tail_norm = a[k..].iter().map(|x| x * x).sum::<f64>().sqrt();
        if k >= n || orig_norm == 0.0 || tail_norm <= RANK_TOL * orig_norm {
            dropped.push(idx);
            continue;
        }
        // Reflector mapping a[k..] onto -sign(a_k) * tail_norm * e_k.
        let alpha = if a[k] >= 0.0 { -tail_norm } else { tail_norm };
        let mut v = vec![0.0; n];
        v[k] = a[k] - alpha;
        v[k + 1..].copy_from_slice(&a[k + 1..]);
        let vtv = dot(&v[k..], &v[k..]);
        let beta = 2.0 / vtv;
        apply_reflector(&v, beta, &mut a);
        apply_reflector(&v, beta, &mut qty);
        let mut r = a[..=k].to_vec();
        r[k] = alpha;
        r_cols.push(r);
        reflectors.push((v, beta));
        kept.push(idx);
    }

    let k = kept.len();
    // Back substitution for R b = Q^T y.
    let mut coefficients = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = qty[i];
        for j in i + 1..k {
            s -= r_cols[j][i] * coefficients[j];
        }
        coefficients[i] = s / r_cols[i][i];
    }
    // R^{-1}, column by column; row norms give diag((R^T R)^{-1}).
    let mut rinv = vec![vec![0.0; k]; k];
    for j in 0..k {
        rinv[j][j] = 1.0 / r_cols[j][j];
        for i in (0..j).rev() {
            let mut s = 0.0;
            for l in i + 1..=j {
                s += r_cols[l][i] * rinv[j][l];
            }
            rinv[j][i] = -s / r_cols[i][i];
        }
    }
    let xtx_inv_diag = (0..k)
        .map(|i| (i..k).map(|j| rinv[j][i] * rinv[j][i]).sum())
        .collect();

    let mut residuals = y.to_vec();
    for (c, &idx) in coefficients.iter().zip(&kept) {
        for (r, x) in residuals.iter_mut().zip(regressors[idx]) {
            *r -= c * x;
        }
    }
    let rss = dot(&residuals, &residuals);
    Ok(LeastSquares {
        kept,
        dropped,
        coefficients,
        xtx_inv_diag,
        rss,
    })
}

fn apply_reflector(v: &[f64], beta: f64, a: &mut [f64]) {
    let s = beta * dot(v, a);
    if s != 0.0 {
        for (x, vi) in a.iter_mut().zip(v) {
            *x -= s * vi;
        }
    }
}
