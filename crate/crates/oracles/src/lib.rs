//! Reference computations for tests. Everything here is written for clarity
//! and independence from the library under test, not speed, and works on
//! plain column slices so it shares no types with `polarlex`.

use num_bigint::BigInt;
use num_rational::BigRational;

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Solution of `min (1/2n)|y - b0 - X b|^2 + lambda |b|_1` by accelerated
/// proximal gradient on centred data.
#[derive(Debug, Clone)]
pub struct LassoOracle {
    pub beta: Vec<f64>,
    /// Duality gap of the returned point.
    pub gap: f64,
}

pub fn lasso(columns: &[&[f64]], y: &[f64], lambda: f64, gap_tol: f64) -> LassoOracle {
    let n = y.len();
    let p = columns.len();
    let nf = n as f64;
    let ym = mean(y);
    let xc: Vec<Vec<f64>> = columns.iter().map(|c| {
        let m = mean(c);
        c.iter().map(|v| v - m).collect()
    }).collect();
    let yc: Vec<f64> = y.iter().map(|v| v - ym).collect();
    let mul = |b: &[f64]| -> Vec<f64> { (0..n).map(|i| (0..p).map(|j| xc[j][i] * b[j]).sum()).collect() };
    let tmul = |r: &[f64]| -> Vec<f64> { (0..p).map(|j| xc[j].iter().zip(r).map(|(a, b)| a * b).sum()).collect() };

    // The trace of X^T X / n bounds its largest eigenvalue.
    let lip: f64 = xc.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>()).sum::<f64>() / nf;
    let step = 1.0 / lip;

    let gap_at = |b: &[f64]| -> f64 {
        let xb = mul(b);
        let r: Vec<f64> = yc.iter().zip(&xb).map(|(a, c)| a - c).collect();
        let rr: f64 = r.iter().map(|a| a * a).sum();
        let primal = rr / (2.0 * nf) + lambda * b.iter().map(|a| a.abs()).sum::<f64>();
        let corr = tmul(&r).iter().fold(0.0f64, |m, a| m.max(a.abs()));
        let s = if corr > nf * lambda { nf * lambda / corr } else { 1.0 };
        let yy: f64 = yc.iter().map(|a| a * a).sum();
        let diff: f64 = yc.iter().zip(&r).map(|(a, ri)| (a - s * ri).powi(2)).sum();
        primal - (yy - diff) / (2.0 * nf)
    };

    let mut beta = vec![0.0; p];
    let mut z = beta.clone();
    let mut t = 1.0f64;
    let mut gap = gap_at(&beta);
    for it in 0..200_000 {
        let xz = mul(&z);
        let r: Vec<f64> = yc.iter().zip(&xz).map(|(a, c)| a - c).collect();
        let grad: Vec<f64> = tmul(&r).iter().map(|a| -a / nf).collect();
        let next: Vec<f64> = (0..p)
            .map(|j| {
                let u = z[j] - step * grad[j];
                u.signum() * (u.abs() - step * lambda).max(0.0)
            })
            .collect();
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        z = (0..p).map(|j| next[j] + (t - 1.0) / t_next * (next[j] - beta[j])).collect();
        beta = next;
        t = t_next;
        if it % 50 == 0 {
            gap = gap_at(&beta);
            if gap < gap_tol {
                break;
            }
        }
    }
    LassoOracle { beta, gap }
}

/// OLS with intercept solved in exact rational arithmetic. Entries for the
/// intercept come first in `coefficients` and `inverse_diagonal`.
#[derive(Debug, Clone)]
pub struct ExactOls {
    pub coefficients: Vec<f64>,
    /// Diagonal of `(X^T X)^{-1}` including the intercept column.
    pub inverse_diagonal: Vec<f64>,
    pub rss: f64,
}

fn q(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite input")
}

fn to_f64(r: &BigRational) -> f64 {
    // Integer division after scaling keeps far more bits than an f64 holds.
    let shift = 200u32;
    let scaled: BigInt = (r.numer() << shift) / r.denom();
    scaled.to_string().parse::<f64>().expect("integer") / 2f64.powi(shift as i32)
}

/// Panics if the design is singular.
pub fn exact_ols(columns: &[&[f64]], y: &[f64]) -> ExactOls {
    let n = y.len();
    let k = columns.len() + 1;
    let xs: Vec<Vec<BigRational>> = std::iter::once(vec![q(1.0); n])
        .chain(columns.iter().map(|c| c.iter().map(|&v| q(v)).collect()))
        .collect();
    let ys: Vec<BigRational> = y.iter().map(|&v| q(v)).collect();
    let zero = BigRational::from_integer(0.into());
    let one = BigRational::from_integer(1.into());
    // Gauss-Jordan on [X^T X | X^T y | I].
    let mut a: Vec<Vec<BigRational>> = (0..k)
        .map(|r| {
            let mut row: Vec<BigRational> = (0..k)
                .map(|c| (0..n).fold(zero.clone(), |acc, i| acc + &xs[r][i] * &xs[c][i]))
                .collect();
            row.push((0..n).fold(zero.clone(), |acc, i| acc + &xs[r][i] * &ys[i]));
            row.extend((0..k).map(|c| if c == r { one.clone() } else { zero.clone() }));
            row
        })
        .collect();
    for c in 0..k {
        let piv = (c..k).find(|&r| a[r][c] != zero).expect("singular design");
        a.swap(c, piv);
        let inv = one.clone() / a[c][c].clone();
        for v in a[c].iter_mut() {
            *v = &*v * &inv;
        }
        let pivot_row = a[c].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != c && row[c] != zero {
                let f = row[c].clone();
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v = &*v - &f * p;
                }
            }
        }
    }
    let coef: Vec<BigRational> = (0..k).map(|r| a[r][k].clone()).collect();
    let rss = (0..n).fold(zero.clone(), |acc, i| {
        let fit = (0..k).fold(zero.clone(), |s, j| s + &coef[j] * &xs[j][i]);
        let r = &ys[i] - fit;
        acc + &r * &r
    });
    ExactOls {
        coefficients: coef.iter().map(to_f64).collect(),
        inverse_diagonal: (0..k).map(|r| to_f64(&a[r][k + 1 + r])).collect(),
        rss: to_f64(&rss),
    }
}

fn ln_beta(a: f64, b: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Regularized incomplete beta `I_x(a, b)` from the hypergeometric series
/// `x^a (1-x)^b / (a B(a,b)) * 2F1(a+b, 1; a+1; x)`, using the reflection
/// `I_x(a,b) = 1 - I_{1-x}(b,a)` where the series would converge slowly.
pub fn incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    if x > (a + 1.0) / (a + b + 2.0) {
        return 1.0 - incomplete_beta(1.0 - x, b, a);
    }
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut k = 0.0;
    while term.abs() > 1e-18 * sum.abs() {
        term *= (a + b + k) / (a + 1.0 + k) * x;
        sum += term;
        k += 1.0;
        assert!(k < 1e7, "series did not converge");
    }
    (a * x.ln() + b * (1.0 - x).ln() - a.ln() - ln_beta(a, b)).exp() * sum
}

/// Student-t CDF through the incomplete beta series.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    let tail = 0.5 * incomplete_beta(df / (df + t * t), df / 2.0, 0.5);
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// F CDF through the incomplete beta series.
pub fn f_cdf(f: f64, d1: f64, d2: f64) -> f64 {
    if f <= 0.0 {
        return 0.0;
    }
    incomplete_beta(d1 * f / (d1 * f + d2), d1 / 2.0, d2 / 2.0)
}

/// Krippendorff's alpha for two raters via the explicit coincidence matrix
/// over distinct pooled values, with `delta` the squared difference function.
pub fn krippendorff_alpha(pairs: &[(f64, f64)], delta: impl Fn(f64, f64) -> f64) -> Option<f64> {
    let mut values: Vec<f64> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let k = values.len();
    let idx = |v: f64| values.iter().position(|&u| u == v).expect("pooled value");
    let mut o = vec![vec![0.0; k]; k];
    for &(a, b) in pairs {
        // Two values per unit: each ordered pair has weight 1 / (m_u - 1) = 1.
        o[idx(a)][idx(b)] += 1.0;
        o[idx(b)][idx(a)] += 1.0;
    }
    let nc: Vec<f64> = o.iter().map(|row| row.iter().sum()).collect();
    let n: f64 = nc.iter().sum();
    let mut d_o = 0.0;
    let mut d_e = 0.0;
    for c in 0..k {
        for kk in 0..k {
            let d = delta(values[c], values[kk]);
            d_o += o[c][kk] * d;
            d_e += nc[c] * nc[kk] * d;
        }
    }
    d_o /= n;
    d_e /= n * (n - 1.0);
    if d_e == 0.0 {
        return (d_o == 0.0).then_some(1.0);
    }
    Some(1.0 - d_o / d_e)
}

pub fn nominal(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        1.0
    }
}

pub fn interval(a: f64, b: f64) -> f64 {
    (a - b) * (a - b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_ols_on_a_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let r = exact_ols(&[&x], &y);
        assert_eq!(r.coefficients, [1.0, 2.0]);
        assert_eq!(r.rss, 0.0);
        // (X^T X)^{-1} for [[4, 6], [6, 14]] has diagonal [0.7, 0.2].
        assert!((r.inverse_diagonal[0] - 0.7).abs() < 1e-15);
        assert!((r.inverse_diagonal[1] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn series_closed_forms() {
        // I_x(1, 1) = x and I_x(2, 1) = x^2.
        assert!((incomplete_beta(0.3, 1.0, 1.0) - 0.3).abs() < 1e-15);
        assert!((incomplete_beta(0.3, 2.0, 1.0) - 0.09).abs() < 1e-15);
        // Cauchy: t with one degree of freedom.
        let t = 2.0f64;
        assert!((student_t_cdf(t, 1.0) - (0.5 + t.atan() / std::f64::consts::PI)).abs() < 1e-14);
    }

    #[test]
    fn lasso_single_column() {
        // Standardized single column: beta = soft(x^T y / n, lambda) / (x^T x / n).
        let x = [-1.5, -0.5, 0.5, 1.5];
        let y = [-1.0, 0.0, 0.5, 2.0];
        let n = 4.0;
        let xy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / n;
        let xx: f64 = x.iter().map(|a| a * a).sum::<f64>() / n;
        let o = lasso(&[&x], &y, 0.1, 1e-15);
        assert!((o.beta[0] - (xy - 0.1) / xx).abs() < 1e-10);
    }
}
