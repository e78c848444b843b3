mod common;

use common::{correlations, instance};
use polarlex::lasso::{self, fit, fit_path, fit_traced, lambda_max, SolverSettings};
use polarlex::linalg::DenseMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn oracle(x: &DenseMatrix, y: &[f64], lambda: f64, gap_tol: f64) -> polarlex_oracles::LassoOracle {
    let cols: Vec<&[f64]> = x.columns().collect();
    polarlex_oracles::lasso(&cols, y, lambda, gap_tol)
}

#[test]
fn matches_dual_gap_oracle_on_100_instances() {
    let start = std::time::Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst = 0.0f64;
    for k in 0..100 {
        let p = rng.random_range(1..=8);
        let (x, y) = instance(1000 + k, 20, p);
        let lmax = lambda_max(&x, &y).unwrap();
        let lambda = if k == 0 { 0.5 * lmax } else { rng.random_range(0.02..0.95) * lmax };
        let f = fit(&x, &y, lambda, None, &SolverSettings::default()).unwrap();
        let o = oracle(&x, &y, lambda, 1e-14);
        assert!(o.gap < 1e-8, "oracle not certified: gap {} (k={k}, p={p}, lambda={lambda})", o.gap);
        for (a, b) in f.coefficients.iter().zip(&o.beta) {
            worst = worst.max((a - b).abs());
        }
    }
    assert!(worst < 1e-4, "largest coefficient deviation {worst}");
    assert!(start.elapsed().as_secs_f64() < 10.0);
}

fn kkt_holds(x: &DenseMatrix, y: &[f64], fit: &lasso::LassoFit, tol: f64) -> Result<(), String> {
    let c = correlations(x, y, fit.intercept, &fit.coefficients);
    for (j, (&cj, &bj)) in c.iter().zip(&fit.coefficients).enumerate() {
        if bj != 0.0 {
            let dev = (cj - fit.lambda * bj.signum()).abs();
            if dev > 10.0 * tol {
                return Err(format!("active {j}: deviation {dev}"));
            }
        } else if cj.abs() > fit.lambda + 10.0 * tol {
            return Err(format!("inactive {j}: |corr| {} > lambda {}", cj.abs(), fit.lambda));
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn kkt_certificate(seed in any::<u64>(), n in 8usize..40, p in 1usize..12, frac in 0.0f64..1.2) {
        let (x, y) = instance(seed, n, p);
        let settings = SolverSettings::default();
        let lambda = frac * lambda_max(&x, &y).unwrap();
        let f = fit(&x, &y, lambda, None, &settings).unwrap();
        prop_assume!(f.converged);
        prop_assert!(f.active_set.iter().all(|&j| f.coefficients[j] != 0.0));
        prop_assert_eq!(f.active_set.len(), f.coefficients.iter().filter(|b| **b != 0.0).count());
        if let Err(e) = kkt_holds(&x, &y, &f, settings.tol) {
            return Err(TestCaseError::fail(e));
        }
    }

    #[test]
    fn objective_never_increases(seed in any::<u64>(), p in 1usize..10, frac in 0.01f64..1.0) {
        let (x, y) = instance(seed, 25, p);
        let lambda = frac * lambda_max(&x, &y).unwrap();
        let (_, trace) = fit_traced(&x, &y, lambda, None, &SolverSettings::default()).unwrap();
        for w in trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0), "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn warm_start_invariance(seed in any::<u64>(), p in 2usize..10) {
        let (x, y) = instance(seed, 30, p);
        let settings = SolverSettings::default();
        let grid = lasso::default_grid(lambda_max(&x, &y).unwrap(), 20, 0.01).unwrap();
        let path = fit_path(&x, &y, &grid, &settings).unwrap();
        for (l, warm) in grid.iter().zip(&path) {
            let cold = fit(&x, &y, *l, None, &settings).unwrap();
            for (a, b) in cold.coefficients.iter().zip(&warm.coefficients) {
                prop_assert!((a - b).abs() <= 10.0 * settings.tol, "{a} vs {b} at {l}");
            }
        }
        for w in path.windows(2) {
            prop_assert!(w[0].l1_norm() <= w[1].l1_norm() + 10.0 * settings.tol);
        }
    }
}

#[test]
fn zero_at_and_above_lambda_max() {
    for seed in 0..20 {
        let (x, y) = instance(seed, 30, 6);
        let lmax = lambda_max(&x, &y).unwrap();
        for l in [lmax, 1.5 * lmax] {
            let f = fit(&x, &y, l, None, &SolverSettings::default()).unwrap();
            assert!(f.coefficients.iter().all(|&b| b == 0.0));
        }
    }
}

#[test]
fn lambda_zero_is_ols() {
    // Well-conditioned 5 x 3 system.
    let (x, y) = instance(4, 5, 3);
    let settings = SolverSettings {
        tol: 1e-12,
        max_iter: 100_000,
    };
    let f = fit(&x, &y, 0.0, None, &settings).unwrap();
    let cols: Vec<&[f64]> = x.columns().collect();
    let ols = polarlex_oracles::exact_ols(&cols, &y);
    for (a, b) in f.coefficients.iter().zip(&ols.coefficients[1..]) {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
}

#[test]
fn single_lambda_max_grid() {
    let (x, y) = instance(8, 40, 5);
    let lmax = lambda_max(&x, &y).unwrap();
    let path = lasso::cross_validate(&x, &y, &[lmax], &lasso::CvConfig::default()).unwrap();
    assert!(path.selected_fit().active_set.is_empty());
    // Held-out error of the intercept-only model is close to var(y) = 1.
    assert!((path.cv_mean_error[0] - 1.0).abs() < 0.3);
}

#[test]
fn cv_is_deterministic_and_starts_empty() {
    let (x, y) = instance(12, 60, 8);
    let grid = lasso::default_grid(lambda_max(&x, &y).unwrap(), 30, 0.01).unwrap();
    let cfg = lasso::CvConfig::default();
    let a = lasso::cross_validate(&x, &y, &grid, &cfg).unwrap();
    let b = lasso::cross_validate(&x, &y, &grid, &cfg).unwrap();
    assert_eq!(a, b);
    assert!(a.fits[0].active_set.is_empty());
    assert_eq!(a.fold_errors.len(), 10);
}

#[test]
fn identical_folds_have_identical_errors() {
    // Two copies of the same 10 rows; with 2 folds holding one copy each the
    // training and held-out data coincide across folds.
    let (x, y) = instance(21, 10, 3);
    let rows: Vec<Vec<f64>> = (0..20).map(|i| (0..3).map(|j| x.get(i % 10, j)).collect()).collect();
    let x2 = DenseMatrix::from_rows(&rows).unwrap();
    let y2: Vec<f64> = (0..20).map(|i| y[i % 10]).collect();
    let folds = lasso::fold_assignment(20, 2, 0).unwrap();
    let seed = (0..10_000u64)
        .find(|&s| {
            let f = lasso::fold_assignment(20, 2, s).unwrap();
            let mut a: Vec<usize> = f[0].iter().map(|i| i % 10).collect();
            a.sort_unstable();
            a == (0..10).collect::<Vec<_>>()
        })
        .expect("a seed that splits the copies");
    let _ = folds;
    let grid = lasso::default_grid(lambda_max(&x2, &y2).unwrap(), 10, 0.05).unwrap();
    let cfg = lasso::CvConfig {
        n_folds: 2,
        fold_seed: seed,
        ..lasso::CvConfig::default()
    };
    let path = lasso::cross_validate(&x2, &y2, &grid, &cfg).unwrap();
    for (a, b) in path.fold_errors[0].iter().zip(&path.fold_errors[1]) {
        assert!((a - b).abs() < 1e-12);
    }
}
