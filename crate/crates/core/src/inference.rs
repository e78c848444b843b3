//! Post-LASSO refit and multicollinearity diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, least_squares, DenseMatrix};

/// OLS on the LASSO support with an intercept.
///
/// Entries are aligned with `support`. A support column that is linearly
/// dependent on earlier ones (in support order) is listed in `dropped`; its
/// coefficient is reported as 0 with an infinite standard error and a zero
/// t-statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostLassoResult {
    pub support: Vec<usize>,
    pub intercept: f64,
    pub ols_coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub t_statistics: Vec<f64>,
    pub dropped: Vec<usize>,
    pub r2: f64,
    pub adjusted_r2: f64,
    pub residual_variance: f64,
    pub rss: f64,
    pub df_residual: usize,
}

/// `coef / se`; a zero standard error yields a signed infinity (or 0 for a
/// zero coefficient).
pub fn t_statistic(coef: f64, se: f64) -> f64 {
    if se > 0.0 {
        coef / se
    } else if se.is_infinite() || coef == 0.0 {
        0.0
    } else {
        coef.signum() * f64::INFINITY
    }
}

const EXACT_FIT_TOL: f64 = 1e-24;

pub fn post_lasso(x: &DenseMatrix, y: &[f64], support: &[usize]) -> Result<PostLassoResult> {
    let n = x.n_rows();
    if y.len() != n {
        return Err(Error::InvalidInput("response length differs from design rows".into()));
    }
    if support.is_empty() {
        return Err(Error::InvalidInput("post-LASSO needs a non-empty support".into()));
    }
    if let Some(&j) = support.iter().find(|&&j| j >= x.n_cols()) {
        return Err(Error::InvalidInput(format!("support index {j} out of range")));
    }
    if support.len() + 1 >= n {
        return Err(Error::InvalidInput(format!(
            "OLS undefined: support of {} terms with {} documents leaves no residual degrees of freedom",
            support.len(),
            n
        )));
    }
    let ones = vec![1.0; n];
    let mut regressors: Vec<&[f64]> = vec![&ones];
    regressors.extend(support.iter().map(|&j| x.column(j)));
    let ls = least_squares(&regressors, y)?;
    if ls.kept.first() != Some(&0) {
        return Err(Error::RankDeficient("intercept column was dropped".into()));
    }

    let k = ls.kept.len() - 1;
    let df_residual = n - k - 1;
    let y_mean = linalg::mean(y);
    let tss: f64 = y.iter().map(|v| (v - y_mean).powi(2)).sum();
    // Residuals at rounding level are an exact fit.
    let rss = if ls.rss <= EXACT_FIT_TOL * tss { 0.0 } else { ls.rss };
    let sigma2 = rss / df_residual as f64;
    let r2 = if tss > 0.0 { 1.0 - rss / tss } else { f64::NAN };
    let adjusted_r2 = 1.0 - (1.0 - r2) * (n as f64 - 1.0) / df_residual as f64;

    let m = support.len();
    let mut ols_coefficients = vec![0.0; m];
    let mut standard_errors = vec![f64::INFINITY; m];
    for (pos, &reg) in ls.kept.iter().enumerate().skip(1) {
        ols_coefficients[reg - 1] = ls.coefficients[pos];
        standard_errors[reg - 1] = (sigma2 * ls.xtx_inv_diag[pos]).sqrt();
    }
    let t_statistics = ols_coefficients
        .iter()
        .zip(&standard_errors)
        .map(|(&c, &s)| t_statistic(c, s))
        .collect();
    let dropped: Vec<usize> = ls.dropped.iter().map(|&r| support[r - 1]).collect();
    if !dropped.is_empty() {
        log::warn!("post-LASSO dropped {} linearly dependent terms", dropped.len());
    }
    Ok(PostLassoResult {
        support: support.to_vec(),
        intercept: ls.coefficients[0],
        ols_coefficients,
        standard_errors,
        t_statistics,
        dropped,
        r2,
        adjusted_r2,
        residual_variance: sigma2,
        rss,
        df_residual,
    })
}

pub const DEFAULT_VIF_THRESHOLD: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VifReport {
    /// Terms in scope, as column indices.
    pub terms: Vec<usize>,
    pub vif: Vec<f64>,
    pub threshold: f64,
    pub count_exceeding_threshold: usize,
}

impl VifReport {
    pub fn share_exceeding(&self) -> f64 {
        self.count_exceeding_threshold as f64 / self.vif.len() as f64
    }
}

/// Variance inflation factors `1 / (1 - R_j^2)`, read off the diagonal of the
/// inverse correlation matrix of the columns in scope.
pub fn vif(x: &DenseMatrix, subset: Option<&[usize]>, threshold: f64) -> Result<VifReport> {
    let terms: Vec<usize> = match subset {
        Some(s) => s.to_vec(),
        None => (0..x.n_cols()).collect(),
    };
    let p = terms.len();
    let n = x.n_rows();
    if p < 2 {
        return Err(Error::InvalidInput("VIF needs at least two terms".into()));
    }
    if p >= n {
        return Err(Error::InvalidInput(format!(
            "VIF undefined for {p} terms on {n} documents; compute it on a subset of fewer than {n} terms"
        )));
    }
    // Centred, unit-length columns so the cross-product is the correlation matrix.
    let mut cols = Vec::with_capacity(p);
    for &j in &terms {
        let c = x.column(j);
        let m = linalg::mean(c);
        let centred: Vec<f64> = c.iter().map(|v| v - m).collect();
        let norm = linalg::dot(&centred, &centred).sqrt();
        if norm == 0.0 {
            return Err(Error::RankDeficient(format!("column {j} is constant")));
        }
        cols.push(centred.into_iter().map(|v| v / norm).collect::<Vec<f64>>());
    }
    let mut corr = vec![0.0; p * p];
    for a in 0..p {
        for b in a..p {
            let v = linalg::dot(&cols[a], &cols[b]);
            corr[a * p + b] = v;
            corr[b * p + a] = v;
        }
    }
    let vif = inverse_diagonal_spd(&mut corr, p).map_err(|k| {
        Error::RankDeficient(format!(
            "column {} is a linear combination of earlier columns",
            terms[k]
        ))
    })?;
    let count_exceeding_threshold = vif.iter().filter(|&&v| v > threshold).count();
    Ok(VifReport {
        terms,
        vif,
        threshold,
        count_exceeding_threshold,
    })
}

/// Diagonal of the inverse of a symmetric positive definite matrix via
/// Cholesky; `Err(k)` when pivot `k` collapses.
fn inverse_diagonal_spd(a: &mut [f64], p: usize) -> std::result::Result<Vec<f64>, usize> {
    // In-place lower Cholesky factor, row-major.
    for j in 0..p {
        let mut d = a[j * p + j];
        for k in 0..j {
            d -= a[j * p + k] * a[j * p + k];
        }
        if d <= 1e-12 {
            return Err(j);
        }
        let d = d.sqrt();
        a[j * p + j] = d;
        for i in j + 1..p {
            let mut s = a[i * p + j];
            for k in 0..j {
                s -= a[i * p + k] * a[j * p + k];
            }
            a[i * p + j] = s / d;
        }
    }
    // diag(A^{-1}) = column norms of L^{-1}: solve L z = e_i for each i.
    let mut diag = vec![0.0; p];
    let mut z = vec![0.0; p];
    for i in 0..p {
        z.iter_mut().for_each(|v| *v = 0.0);
        z[i] = 1.0 / a[i * p + i];
        for r in i + 1..p {
            let mut s = 0.0;
            for k in i..r {
                s += a[r * p + k] * z[k];
            }
            z[r] = -s / a[r * p + r];
        }
        diag[i] = z[i..].iter().map(|v| v * v).sum();
    }
    Ok(diag)
}
