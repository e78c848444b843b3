//! L1-penalized least squares by cyclic coordinate descent.
//!
//! The solver minimizes the penalty form
//!
//! ```text
//! (1 / 2n) * ||y - b0 - X b||^2 + lambda * ||b||_1
//! ```
//!
//! with an unpenalized intercept. It works on the centred Gram matrix
//! (`X^T X / n`), so one sweep costs `O(p)` plus `O(p)` per coefficient
//! that actually moves, and cross-validation folds reuse the full-data
//! moments by subtracting the held-out block.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Seed used for fold assignment when none is given.
pub const DEFAULT_FOLD_SEED: u64 = 20_170_515;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    /// Stop once a full sweep moves no coefficient by more than this.
    pub tol: f64,
    /// Maximum number of sweeps (full or active-set).
    pub max_iter: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tol: 1e-7,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoFit {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub lambda: f64,
    pub active_set: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
    pub objective_value: f64,
}

impl LassoFit {
    pub fn l1_norm(&self) -> f64 {
        self.coefficients.iter().map(|b| b.abs()).sum()
    }

    /// `intercept + x_i . beta` for every row of `x`.
    pub fn predict(&self, x: &DenseMatrix) -> Vec<f64> {
        let mut out = vec![self.intercept; x.n_rows()];
        for &j in &self.active_set {
            let b = self.coefficients[j];
            for (o, v) in out.iter_mut().zip(x.column(j)) {
                *o += b * v;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    /// Smallest mean CV error; ties go to the largest lambda.
    Min,
    /// Largest lambda within one standard error of the minimum.
    OneSe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoPath {
    pub lambdas: Vec<f64>,
    /// Fits on all observations, one per lambda.
    pub fits: Vec<LassoFit>,
    pub cv_mean_error: Vec<f64>,
    pub cv_se_error: Vec<f64>,
    /// Held-out mean squared error, `fold_errors[fold][lambda]`.
    pub fold_errors: Vec<Vec<f64>>,
    pub selected_index: usize,
    pub selected_lambda: f64,
    pub selection_rule: SelectionRule,
}

impl LassoPath {
    pub fn selected_fit(&self) -> &LassoFit {
        &self.fits[self.selected_index]
    }

    pub fn all_converged(&self) -> bool {
        self.fits.iter().all(|f| f.converged)
    }

    /// Grid index that `rule` would pick from this path's CV errors.
    pub fn index_for(&self, rule: SelectionRule) -> usize {
        select_index(&self.cv_mean_error, &self.cv_se_error, rule)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub n_folds: usize,
    pub fold_seed: u64,
    pub selection_rule: SelectionRule,
    pub solver: SolverSettings,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            n_folds: 10,
            fold_seed: DEFAULT_FOLD_SEED,
            selection_rule: SelectionRule::Min,
            solver: SolverSettings::default(),
        }
    }
}

/// `S(z, g) = sign(z) * max(|z| - g, 0)`.
#[inline]
pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// Uncentred sufficient statistics over a set of rows.
#[derive(Debug, Clone)]
struct Moments {
    n: usize,
    xtx: Vec<f64>,
    xty: Vec<f64>,
    x_sum: Vec<f64>,
    y_sum: f64,
    yty: f64,
}

impl Moments {
    fn from_rows(x: &DenseMatrix, y: &[f64], rows: Option<&[usize]>) -> Moments {
        let sub;
        let (x, y_sel): (&DenseMatrix, Vec<f64>) = match rows {
            Some(r) => {
                sub = x.select_rows(r);
                (&sub, r.iter().map(|&i| y[i]).collect())
            }
            None => (x, y.to_vec()),
        };
        let p = x.n_cols();
        let mut xtx = vec![0.0; p * p];
        for j in 0..p {
            let cj = x.column(j);
            for k in j..p {
                let v = crate::linalg::dot(cj, x.column(k));
                xtx[j * p + k] = v;
                xtx[k * p + j] = v;
            }
        }
        Moments {
            n: y_sel.len(),
            xty: x.columns().map(|c| crate::linalg::dot(c, &y_sel)).collect(),
            x_sum: x.columns().map(|c| c.iter().sum()).collect(),
            y_sum: y_sel.iter().sum(),
            yty: crate::linalg::dot(&y_sel, &y_sel),
            xtx,
        }
    }

    fn minus(&self, other: &Moments) -> Moments {
        let sub = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect();
        Moments {
            n: self.n - other.n,
            xtx: sub(&self.xtx, &other.xtx),
            xty: sub(&self.xty, &other.xty),
            x_sum: sub(&self.x_sum, &other.x_sum),
            y_sum: self.y_sum - other.y_sum,
            yty: self.yty - other.yty,
        }
    }

    fn centred(&self) -> Covariance {
        let n = self.n as f64;
        let p = self.x_sum.len();
        let x_mean: Vec<f64> = self.x_sum.iter().map(|s| s / n).collect();
        let y_mean = self.y_sum / n;
        let mut gram = vec![0.0; p * p];
        for j in 0..p {
            for k in 0..p {
                gram[j * p + k] = self.xtx[j * p + k] / n - x_mean[j] * x_mean[k];
            }
        }
        Covariance {
            p,
            xty: (0..p).map(|j| self.xty[j] / n - x_mean[j] * y_mean).collect(),
            yty: self.yty / n - y_mean * y_mean,
            gram,
            x_mean,
            y_mean,
        }
    }
}

/// Centred second moments scaled by `1/n`.
#[derive(Debug, Clone)]
struct Covariance {
    p: usize,
    gram: Vec<f64>,
    xty: Vec<f64>,
    yty: f64,
    x_mean: Vec<f64>,
    y_mean: f64,
}

impl Covariance {
    fn lambda_max(&self) -> f64 {
        self.xty.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn objective(&self, beta: &[f64], grad: &[f64], lambda: f64) -> f64 {
        // beta' G beta = beta' (xty - grad)
        let mut fit = 0.0;
        let mut l1 = 0.0;
        for j in 0..self.p {
            if beta[j] != 0.0 {
                fit += beta[j] * (2.0 * self.xty[j] - (self.xty[j] - grad[j]));
                l1 += beta[j].abs();
            }
        }
        0.5 * (self.yty - fit) + lambda * l1
    }

    fn solve(
        &self,
        lambda: f64,
        warm_start: Option<&[f64]>,
        settings: &SolverSettings,
        mut trace: Option<&mut Vec<f64>>,
    ) -> LassoFit {
        let p = self.p;
        let mut beta = match warm_start {
            Some(w) => w.to_vec(),
            None => vec![0.0; p],
        };
        let mut grad = self.xty.clone();
        for (k, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                for (j, g) in grad.iter_mut().enumerate() {
                    *g -= self.gram[j * p + k] * b;
                }
            }
        }
        if let Some(t) = trace.as_deref_mut() {
            t.push(self.objective(&beta, &grad, lambda));
        }

        let mut iterations = 0;
        let mut converged = false;
        'outer: while iterations < settings.max_iter {
            let all: Vec<usize> = (0..p).collect();
            let change = self.sweep(&all, lambda, &mut beta, &mut grad);
            iterations += 1;
            if let Some(t) = trace.as_deref_mut() {
                t.push(self.objective(&beta, &grad, lambda));
            }
            if change < settings.tol {
                converged = true;
                break;
            }
            // Iterate on the current support until it settles.
            let active: Vec<usize> = (0..p).filter(|&j| beta[j] != 0.0).collect();
            loop {
                if iterations >= settings.max_iter {
                    break 'outer;
                }
                let change = self.sweep(&active, lambda, &mut beta, &mut grad);
                iterations += 1;
                if let Some(t) = trace.as_deref_mut() {
                    t.push(self.objective(&beta, &grad, lambda));
                }
                if change < settings.tol {
                    break;
                }
            }
        }

        let intercept = self.y_mean
            - beta
                .iter()
                .zip(&self.x_mean)
                .map(|(b, m)| b * m)
                .sum::<f64>();
        LassoFit {
            intercept,
            active_set: (0..p).filter(|&j| beta[j] != 0.0).collect(),
            objective_value: self.objective(&beta, &grad, lambda),
            coefficients: beta,
            lambda,
            iterations,
            converged,
        }
    }

    /// One cyclic pass over `coords`; returns the largest coefficient change.
    fn sweep(&self, coords: &[usize], lambda: f64, beta: &mut [f64], grad: &mut [f64]) -> f64 {
        let p = self.p;
        let mut max_change: f64 = 0.0;
        for &j in coords {
            let gjj = self.gram[j * p + j];
            if gjj <= 0.0 {
                continue;
            }
            let old = beta[j];
            let new = soft_threshold(grad[j] + gjj * old, lambda) / gjj;
            if new != old {
                let delta = new - old;
                let col = &self.gram[j * p..(j + 1) * p];
                for (g, c) in grad.iter_mut().zip(col) {
                    *g -= delta * c;
                }
                beta[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        max_change
    }
}

fn check_inputs(x: &DenseMatrix, y: &[f64]) -> Result<()> {
    if x.n_cols() == 0 {
        return Err(Error::InvalidInput("empty vocabulary".into()));
    }
    if x.n_rows() != y.len() {
        return Err(Error::InvalidInput(format!(
            "design has {} rows but response has {} values",
            x.n_rows(),
            y.len()
        )));
    }
    if x.n_rows() < 2 {
        return Err(Error::InvalidInput("at least two observations are required".into()));
    }
    if !x.all_finite() || !y.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidInput("design or response contains non-finite values".into()));
    }
    Ok(())
}

fn covariance(x: &DenseMatrix, y: &[f64]) -> Covariance {
    Moments::from_rows(x, y, None).centred()
}

/// Smallest penalty at which every coefficient is zero: `max_j |X_j^T y| / n`
/// on centred data.
pub fn lambda_max(x: &DenseMatrix, y: &[f64]) -> Result<f64> {
    check_inputs(x, y)?;
    Ok(covariance(x, y).lambda_max())
}

/// Solves the penalized problem at a single `lambda`.
pub fn fit(
    x: &DenseMatrix,
    y: &[f64],
    lambda: f64,
    warm_start: Option<&[f64]>,
    settings: &SolverSettings,
) -> Result<LassoFit> {
    fit_inner(x, y, lambda, warm_start, settings, None)
}

/// Like [`fit`], also returning the objective before the first sweep and
/// after every sweep.
pub fn fit_traced(
    x: &DenseMatrix,
    y: &[f64],
    lambda: f64,
    warm_start: Option<&[f64]>,
    settings: &SolverSettings,
) -> Result<(LassoFit, Vec<f64>)> {
    let mut trace = Vec::new();
    let fit = fit_inner(x, y, lambda, warm_start, settings, Some(&mut trace))?;
    Ok((fit, trace))
}

fn fit_inner(
    x: &DenseMatrix,
    y: &[f64],
    lambda: f64,
    warm_start: Option<&[f64]>,
    settings: &SolverSettings,
    trace: Option<&mut Vec<f64>>,
) -> Result<LassoFit> {
    check_inputs(x, y)?;
    check_settings(settings)?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidInput(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    if let Some(w) = warm_start {
        if w.len() != x.n_cols() {
            return Err(Error::InvalidInput("warm start has the wrong length".into()));
        }
    }
    let fit = covariance(x, y).solve(lambda, warm_start, settings, trace);
    if !fit.converged {
        log::warn!("coordinate descent did not converge at lambda={lambda}");
    }
    Ok(fit)
}

fn check_settings(settings: &SolverSettings) -> Result<()> {
    if settings.tol.is_nan() || settings.tol <= 0.0 {
        return Err(Error::Config("tol must be positive".into()));
    }
    if settings.max_iter == 0 {
        return Err(Error::Config("max_iter must be positive".into()));
    }
    Ok(())
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config("lambda grid is empty".into()));
    }
    if grid.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err(Error::Config("lambda grid values must be finite and >= 0".into()));
    }
    if grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config("lambda grid must be strictly decreasing".into()));
    }
    Ok(())
}

/// Warm-started fits along a strictly decreasing grid.
pub fn fit_path(x: &DenseMatrix, y: &[f64], grid: &[f64], settings: &SolverSettings) -> Result<Vec<LassoFit>> {
    check_inputs(x, y)?;
    check_settings(settings)?;
    check_grid(grid)?;
    Ok(path_on(&covariance(x, y), grid, settings))
}

fn path_on(cov: &Covariance, grid: &[f64], settings: &SolverSettings) -> Vec<LassoFit> {
    let mut fits: Vec<LassoFit> = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let warm = fits.last().map(|f| f.coefficients.as_slice());
        let fit = cov.solve(lambda, warm, settings, None);
        if !fit.converged {
            log::warn!("coordinate descent did not converge at lambda={lambda}");
        }
        fits.push(fit);
    }
    fits
}

/// `n_points` log-spaced values from `lambda_max` down to `ratio * lambda_max`.
///
/// ```
/// let grid = polarlex::lasso::default_grid(1.0, 3, 0.01).unwrap();
/// assert_eq!(grid[0], 1.0);
/// assert!((grid[1] - 0.1).abs() < 1e-15 && (grid[2] - 0.01).abs() < 1e-15);
/// ```
pub fn default_grid(lambda_max: f64, n_points: usize, ratio: f64) -> Result<Vec<f64>> {
    if n_points < 2 {
        return Err(Error::Config("a lambda grid needs at least 2 points".into()));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Config(format!("grid ratio must lie in (0, 1), got {ratio}")));
    }
    if !(lambda_max > 0.0 && lambda_max.is_finite()) {
        return Err(Error::Config(format!(
            "lambda_max must be positive and finite, got {lambda_max}; the response is uncorrelated with every term"
        )));
    }
    let step = ratio.ln() / (n_points - 1) as f64;
    Ok((0..n_points)
        .map(|k| lambda_max * (step * k as f64).exp())
        .collect())
}

/// Deterministic fold assignment: a seeded shuffle cut into contiguous blocks.
pub fn fold_assignment(n: usize, n_folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if n_folds < 2 {
        return Err(Error::Config("at least 2 folds are required".into()));
    }
    if n_folds > n {
        return Err(Error::Config(format!(
            "{n_folds} folds leave some fold without held-out documents (n = {n})"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok((0..n_folds)
        .map(|k| {
            let mut fold = perm[k * n / n_folds..(k + 1) * n / n_folds].to_vec();
            fold.sort_unstable();
            fold
        })
        .collect())
}

/// K-fold cross-validation over `grid`, followed by a re-fit on all
/// observations at every grid value.
pub fn cross_validate(x: &DenseMatrix, y: &[f64], grid: &[f64], config: &CvConfig) -> Result<LassoPath> {
    check_inputs(x, y)?;
    check_settings(&config.solver)?;
    check_grid(grid)?;
    let folds = fold_assignment(x.n_rows(), config.n_folds, config.fold_seed)?;
    let full = Moments::from_rows(x, y, None);

    let fold_errors: Vec<Vec<f64>> = folds
        .par_iter()
        .map(|held_out| {
            let held = Moments::from_rows(x, y, Some(held_out));
            let cov = full.minus(&held).centred();
            let fits = path_on(&cov, grid, &config.solver);
            let x_held = x.select_rows(held_out);
            fits.iter()
                .map(|f| {
                    let pred = f.predict(&x_held);
                    pred.iter()
                        .zip(held_out)
                        .map(|(p, &i)| (y[i] - p) * (y[i] - p))
                        .sum::<f64>()
                        / held_out.len() as f64
                })
                .collect()
        })
        .collect();

    let k = config.n_folds as f64;
    let n_lambda = grid.len();
    let cv_mean_error: Vec<f64> = (0..n_lambda)
        .map(|l| fold_errors.iter().map(|e| e[l]).sum::<f64>() / k)
        .collect();
    let cv_se_error: Vec<f64> = (0..n_lambda)
        .map(|l| {
            let m = cv_mean_error[l];
            let var = fold_errors.iter().map(|e| (e[l] - m).powi(2)).sum::<f64>() / (k - 1.0);
            (var / k).sqrt()
        })
        .collect();
    let selected_index = select_index(&cv_mean_error, &cv_se_error, config.selection_rule);
    let fits = path_on(&full.centred(), grid, &config.solver);
    Ok(LassoPath {
        lambdas: grid.to_vec(),
        fits,
        cv_mean_error,
        cv_se_error,
        fold_errors,
        selected_index,
        selected_lambda: grid[selected_index],
        selection_rule: config.selection_rule,
    })
}

fn select_index(mean: &[f64], se: &[f64], rule: SelectionRule) -> usize {
    let min = mean.iter().copied().fold(f64::INFINITY, f64::min);
    // The grid is decreasing, so the first hit is the largest lambda.
    let argmin = mean.iter().position(|&m| m == min).unwrap_or(0);
    match rule {
        SelectionRule::Min => argmin,
        SelectionRule::OneSe => {
            let threshold = min + se[argmin];
            mean.iter().position(|&m| m <= threshold).unwrap_or(argmin)
        }
    }
}
