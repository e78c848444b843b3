//! Placement of sentiment within documents (Welch and paired t-tests) and the
//! joint F-test for groups of terms.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dictionary::{HalfScores, PolarityDictionary, ShareThreshold};
use crate::distributions::{f_sf, student_t_cdf, student_t_sf, student_t_two_sided};
use crate::error::{Error, Result};
use crate::evaluation::ReferenceDictionary;
use crate::linalg::{self, least_squares, DenseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    #[default]
    TwoSided,
    /// `mean_1 < mean_2`.
    Less,
    /// `mean_1 > mean_2`.
    Greater,
}

impl Alternative {
    fn p_value(self, t: f64, df: f64) -> f64 {
        match self {
            Alternative::TwoSided => student_t_two_sided(t, df),
            Alternative::Less => student_t_cdf(t, df),
            Alternative::Greater => student_t_sf(t, df),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WelchResult {
    pub mean_1: f64,
    pub mean_2: f64,
    pub t_statistic: f64,
    pub degrees_of_freedom: f64,
    pub p_value: f64,
    pub alternative: Alternative,
}

fn check_sample(s: &[f64], which: &str) -> Result<()> {
    if s.len() < 2 {
        return Err(Error::InvalidInput(format!("{which} needs at least 2 values")));
    }
    if !s.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidInput(format!("{which} contains non-finite values")));
    }
    Ok(())
}

/// p-value when the standard error is zero: the statistic is 0 or infinite.
fn degenerate_p(t: f64, alternative: Alternative) -> f64 {
    if t == 0.0 {
        return match alternative {
            Alternative::TwoSided => 1.0,
            _ => 0.5,
        };
    }
    let agrees = match alternative {
        Alternative::TwoSided => true,
        Alternative::Less => t < 0.0,
        Alternative::Greater => t > 0.0,
    };
    if agrees {
        0.0
    } else {
        1.0
    }
}

/// Welch's unequal-variance t-test with Welch–Satterthwaite degrees of freedom.
///
/// ```
/// use polarlex::hypotheses::{welch_t, Alternative};
///
/// let r = welch_t(&[0.0, 1.0, 2.0], &[1.0, 2.0, 3.0], Alternative::TwoSided).unwrap();
/// assert!((r.t_statistic + 1.224744871391589).abs() < 1e-12);
/// assert!((r.degrees_of_freedom - 4.0).abs() < 1e-12);
/// ```
pub fn welch_t(sample_1: &[f64], sample_2: &[f64], alternative: Alternative) -> Result<WelchResult> {
    check_sample(sample_1, "sample_1")?;
    check_sample(sample_2, "sample_2")?;
    let (n1, n2) = (sample_1.len() as f64, sample_2.len() as f64);
    let (m1, m2) = (linalg::mean(sample_1), linalg::mean(sample_2));
    let a = linalg::sample_variance(sample_1) / n1;
    let b = linalg::sample_variance(sample_2) / n2;
    let se2 = a + b;
    if se2 == 0.0 {
        let t = if m1 == m2 { 0.0 } else { (m1 - m2).signum() * f64::INFINITY };
        return Ok(WelchResult {
            mean_1: m1,
            mean_2: m2,
            t_statistic: t,
            degrees_of_freedom: n1 + n2 - 2.0,
            p_value: degenerate_p(t, alternative),
            alternative,
        });
    }
    let t = (m1 - m2) / se2.sqrt();
    let df = se2 * se2 / (a * a / (n1 - 1.0) + b * b / (n2 - 1.0));
    Ok(WelchResult {
        mean_1: m1,
        mean_2: m2,
        t_statistic: t,
        degrees_of_freedom: df,
        p_value: alternative.p_value(t, df).clamp(0.0, 1.0),
        alternative,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedResult {
    pub mean_difference: f64,
    pub t_statistic: f64,
    pub degrees_of_freedom: f64,
    pub p_value: f64,
    pub alternative: Alternative,
}

/// Paired t-test on `sample_1[i] - sample_2[i]`.
pub fn paired_t(sample_1: &[f64], sample_2: &[f64], alternative: Alternative) -> Result<PairedResult> {
    if sample_1.len() != sample_2.len() {
        return Err(Error::InvalidInput("paired samples differ in length".into()));
    }
    check_sample(sample_1, "sample_1")?;
    check_sample(sample_2, "sample_2")?;
    let d: Vec<f64> = sample_1.iter().zip(sample_2).map(|(a, b)| a - b).collect();
    let n = d.len() as f64;
    let m = linalg::mean(&d);
    let se = (linalg::sample_variance(&d) / n).sqrt();
    let df = n - 1.0;
    let (t, p) = if se == 0.0 {
        let t = if m == 0.0 { 0.0 } else { m.signum() * f64::INFINITY };
        (t, degenerate_p(t, alternative))
    } else {
        let t = m / se;
        (t, alternative.p_value(t, df).clamp(0.0, 1.0))
    };
    Ok(PairedResult {
        mean_difference: m,
        t_statistic: t,
        degrees_of_freedom: df,
        p_value: p,
        alternative,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointFResult {
    /// `None` when the full model fits exactly.
    pub f_statistic: Option<f64>,
    pub df_numerator: usize,
    pub df_denominator: usize,
    pub p_value: Option<f64>,
    /// Tested columns that remain after dropping linearly dependent ones.
    pub tested_terms: Vec<usize>,
    pub rss_full: f64,
    pub rss_restricted: f64,
}

/// Nested-OLS F-test of `H0: beta_j = 0 for all j in tested_subset`.
///
/// Both models include an intercept. Regressors enter the full model with the
/// untested support first, so rank deficiency is resolved against the tested
/// columns and the numerator degrees of freedom count the tested columns
/// that survive.
pub fn joint_f_test(
    x: &DenseMatrix,
    y: &[f64],
    full_support: &[usize],
    tested_subset: &[usize],
) -> Result<JointFResult> {
    let n = x.n_rows();
    if y.len() != n {
        return Err(Error::InvalidInput("response length differs from design rows".into()));
    }
    let tested: BTreeSet<usize> = tested_subset.iter().copied().collect();
    let full: BTreeSet<usize> = full_support.iter().copied().collect();
    if tested.is_empty() {
        return Err(Error::InvalidInput("the tested subset is empty".into()));
    }
    if let Some(j) = tested.iter().find(|j| !full.contains(j)) {
        return Err(Error::InvalidInput(format!("tested column {j} is not in the full support")));
    }
    if let Some(&j) = full.iter().find(|&&j| j >= x.n_cols()) {
        return Err(Error::InvalidInput(format!("column {j} out of range")));
    }
    let restricted: Vec<usize> = full.difference(&tested).copied().collect();
    let tested: Vec<usize> = tested.into_iter().collect();
    let ones = vec![1.0; n];
    let mut regressors: Vec<&[f64]> = vec![&ones];
    regressors.extend(restricted.iter().map(|&j| x.column(j)));
    let restricted_fit = least_squares(&regressors, y)?;
    regressors.extend(tested.iter().map(|&j| x.column(j)));
    let full_fit = least_squares(&regressors, y)?;

    let offset = 1 + restricted.len();
    let tested_terms: Vec<usize> = full_fit
        .kept
        .iter()
        .filter(|&&r| r >= offset)
        .map(|&r| tested[r - offset])
        .collect();
    let q = full_fit.kept.len() - restricted_fit.kept.len();
    if q == 0 {
        return Err(Error::RankDeficient(
            "every tested column is a linear combination of the other regressors".into(),
        ));
    }
    if full_fit.kept.len() >= n {
        return Err(Error::InvalidInput(format!(
            "full model with {} regressors leaves no residual degrees of freedom on {n} observations",
            full_fit.kept.len()
        )));
    }
    let df_denominator = n - full_fit.kept.len();
    let y_mean = linalg::mean(y);
    let tss: f64 = y.iter().map(|v| (v - y_mean).powi(2)).sum();
    let rss_full = if full_fit.rss <= 1e-24 * tss { 0.0 } else { full_fit.rss };
    let rss_restricted = restricted_fit.rss;
    let (f_statistic, p_value) = if rss_full == 0.0 {
        (None, None)
    } else {
        let f = (((rss_restricted - rss_full) / q as f64) / (rss_full / df_denominator as f64)).max(0.0);
        (Some(f), Some(f_sf(f, q as f64, df_denominator as f64)))
    };
    Ok(JointFResult {
        f_statistic,
        df_numerator: q,
        df_denominator,
        p_value,
        tested_terms,
        rss_full,
        rss_restricted,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    /// Dictionary terms labelled (either way) by the reference.
    pub informative: Vec<String>,
    pub non_informative: Vec<String>,
}

impl Partition {
    pub fn informative_share(&self) -> f64 {
        let total = self.informative.len() + self.non_informative.len();
        if total == 0 {
            0.0
        } else {
            self.informative.len() as f64 / total as f64
        }
    }

    pub fn non_informative_share(&self) -> f64 {
        let total = self.informative.len() + self.non_informative.len();
        if total == 0 {
            0.0
        } else {
            self.non_informative.len() as f64 / total as f64
        }
    }
}

/// Splits dictionary terms by whether the reference lists them. Terms keep
/// dictionary order.
pub fn partition_by_reference(dict: &PolarityDictionary, reference: &ReferenceDictionary) -> Partition {
    let (informative, non_informative): (Vec<String>, Vec<String>) = dict
        .terms()
        .map(str::to_owned)
        .partition(|t| reference.entries.contains_key(t));
    Partition {
        informative,
        non_informative,
    }
}

/// The nine distributional statistics reported per series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStatistics {
    pub mean: f64,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
    pub std_dev: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

pub const SUMMARY_ROWS: [&str; 9] = [
    "Mean", "Min.", "25% Quantile", "Median", "75% Quantile", "Max.", "Std. Dev.", "Skewness", "Kurtosis",
];

impl SummaryStatistics {
    /// Sample standard deviation (n-1); skewness `m3 / m2^1.5` and excess
    /// kurtosis `m4 / m2^2 - 3` from central moments; type-7 quantiles.
    pub fn of(values: &[f64]) -> Result<SummaryStatistics> {
        if values.is_empty() {
            return Err(Error::InvalidInput("cannot summarize an empty series".into()));
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        let mean = linalg::mean(&v);
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for x in &v {
            let d = x - mean;
            m2 += d * d;
            m3 += d * d * d;
            m4 += d * d * d * d;
        }
        m2 /= n;
        m3 /= n;
        m4 /= n;
        let (skewness, kurtosis) = if m2 > 0.0 {
            (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
        } else {
            (f64::NAN, f64::NAN)
        };
        Ok(SummaryStatistics {
            mean,
            min: v[0],
            q25: quantile_sorted(&v, 0.25),
            median: quantile_sorted(&v, 0.5),
            q75: quantile_sorted(&v, 0.75),
            max: v[v.len() - 1],
            std_dev: if v.len() > 1 { linalg::sample_variance(&v).sqrt() } else { 0.0 },
            skewness,
            kurtosis,
        })
    }

    pub fn values(&self) -> [f64; 9] {
        [
            self.mean,
            self.min,
            self.q25,
            self.median,
            self.q75,
            self.max,
            self.std_dev,
            self.skewness,
            self.kurtosis,
        ]
    }
}

/// Linear interpolation between order statistics (`h = (n-1) p`).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementPanel {
    pub name: String,
    pub n_documents: usize,
    pub mu1: SummaryStatistics,
    pub mu2: SummaryStatistics,
    pub mu: SummaryStatistics,
    /// Welch test of mu1 against mu2.
    pub welch: Option<WelchResult>,
    pub paired: Option<PairedResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementReport {
    pub panels: Vec<PlacementPanel>,
}

fn panel(name: &str, halves: &[HalfScores], alternative: Alternative) -> Result<PlacementPanel> {
    let mu1: Vec<f64> = halves.iter().map(|h| h.mu1).collect();
    let mu2: Vec<f64> = halves.iter().map(|h| h.mu2).collect();
    let mu: Vec<f64> = halves.iter().map(|h| h.mu).collect();
    let (welch, paired) = if halves.len() >= 2 {
        (Some(welch_t(&mu1, &mu2, alternative)?), Some(paired_t(&mu1, &mu2, alternative)?))
    } else {
        (None, None)
    };
    Ok(PlacementPanel {
        name: name.to_owned(),
        n_documents: halves.len(),
        mu1: SummaryStatistics::of(&mu1)?,
        mu2: SummaryStatistics::of(&mu2)?,
        mu: SummaryStatistics::of(&mu)?,
        welch,
        paired,
    })
}

/// Summary of half-document scores: all documents, and, when responses are
/// given, documents with a positive and a negative gold standard (split by
/// `threshold`).
pub fn placement_report(
    halves: &[HalfScores],
    responses: Option<&[f64]>,
    threshold: ShareThreshold,
    alternative: Alternative,
) -> Result<PlacementReport> {
    let mut panels = vec![panel("all", halves, alternative)?];
    if let Some(y) = responses {
        if y.len() != halves.len() {
            return Err(Error::InvalidInput("responses and scored documents differ in length".into()));
        }
        let cutoff = threshold.cutoff(y);
        let pos: Vec<HalfScores> = halves.iter().zip(y).filter(|(_, &v)| v > cutoff).map(|(h, _)| *h).collect();
        let neg: Vec<HalfScores> = halves.iter().zip(y).filter(|(_, &v)| v <= cutoff).map(|(h, _)| *h).collect();
        for (name, part) in [("positive", pos), ("negative", neg)] {
            if part.is_empty() {
                return Err(Error::InvalidInput(format!("no documents with a {name} gold standard")));
            }
            panels.push(panel(name, &part, alternative)?);
        }
    }
    Ok(PlacementReport { panels })
}

impl PlacementReport {
    /// Aligned text table: one row per statistic, three columns per panel.
    pub fn to_table(&self) -> String {
        let mut out = format!("{:<14}", "");
        for p in &self.panels {
            for s in ["mu1", "mu2", "mu"] {
                out.push_str(&format!("{:>12}", format!("{}:{s}", short(&p.name))));
            }
        }
        out.push('\n');
        for (i, row) in SUMMARY_ROWS.iter().enumerate() {
            out.push_str(&format!("{row:<14}"));
            for p in &self.panels {
                for s in [&p.mu1, &p.mu2, &p.mu] {
                    out.push_str(&format!("{:>12.4}", s.values()[i]));
                }
            }
            out.push('\n');
        }
        for p in &self.panels {
            if let Some(w) = &p.welch {
                out.push_str(&format!(
                    "{}: Welch t = {:.4}, df = {:.2}, p = {:.4e}\n",
                    p.name, w.t_statistic, w.degrees_of_freedom, w.p_value
                ));
            }
        }
        out
    }
}

fn short(name: &str) -> &str {
    &name[..name.len().min(3)]
}
