//! Agreement with human-made word lists and out-of-sample benchmarks.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dictionary::PolarityDictionary;
use crate::distributions::student_t_two_sided;
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{fit_model, ModelConfig};
use crate::text_pipeline::{PipelineConfig, TokenizedDocument};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    /// Labels are -1 or +1.
    Binary,
    /// Scores in [-1, 1].
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceDictionary {
    pub name: String,
    /// Normalized term -> value.
    pub entries: BTreeMap<String, f64>,
    pub value_kind: ValueKind,
    /// Terms whose duplicates (after stemming) split evenly and were dropped.
    pub tied_terms_dropped: usize,
    /// Input lines merged into an earlier term after stemming.
    pub duplicates_merged: usize,
}

impl ReferenceDictionary {
    /// Builds a reference list from raw `(term, value)` pairs, normalizing each
    /// term with `pipeline`. Values of exactly -1 or +1 make a binary list;
    /// anything else in [-1, 1] makes it continuous. Duplicates after
    /// normalization are merged: binary lists take the majority label and
    /// drop exact ties, continuous lists average.
    pub fn from_pairs<S: AsRef<str>>(
        name: impl Into<String>,
        pairs: impl IntoIterator<Item = (S, f64)>,
        pipeline: &PipelineConfig,
    ) -> Result<ReferenceDictionary> {
        let mut grouped: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        let mut n_lines = 0usize;
        for (term, value) in pairs {
            if !(-1.0..=1.0).contains(&value) {
                return Err(Error::InvalidInput(format!(
                    "value {value} for {:?} lies outside [-1, 1]",
                    term.as_ref()
                )));
            }
            n_lines += 1;
            match pipeline.normalize_term(term.as_ref()) {
                Some(t) => grouped.entry(t).or_default().push(value),
                None => log::debug!("reference term {:?} normalizes to nothing", term.as_ref()),
            }
        }
        let binary = grouped.values().flatten().all(|&v| v == 1.0 || v == -1.0);
        let usable: usize = grouped.values().map(Vec::len).sum();
        let duplicates_merged = usable - grouped.len();
        let mut tied_terms_dropped = 0;
        let mut entries = BTreeMap::new();
        for (term, values) in grouped {
            if binary {
                let balance: f64 = values.iter().sum();
                if balance == 0.0 {
                    tied_terms_dropped += 1;
                } else {
                    entries.insert(term, balance.signum());
                }
            } else {
                entries.insert(term, linalg::mean(&values));
            }
        }
        log::debug!("reference list: {n_lines} lines, {} terms", entries.len());
        Ok(ReferenceDictionary {
            name: name.into(),
            entries,
            value_kind: if binary { ValueKind::Binary } else { ValueKind::Continuous },
            tied_terms_dropped,
            duplicates_merged,
        })
    }

    /// Reads `term,value` lines. Blank lines and lines starting with `#` are
    /// skipped, as is a leading `term,value` header.
    pub fn load(path: &Path, pipeline: &PipelineConfig) -> Result<ReferenceDictionary> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || (pairs.is_empty() && line == "term,value") {
                continue;
            }
            let (term, value) = line
                .rsplit_once(',')
                .ok_or_else(|| Error::parse(path, line_no, "expected \"term,value\""))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::parse(path, line_no, format!("invalid value {:?}", value.trim())))?;
            if !(-1.0..=1.0).contains(&value) {
                return Err(Error::parse(path, line_no, format!("value {value} lies outside [-1, 1]")));
            }
            pairs.push((term.trim().to_owned(), value));
        }
        if pairs.is_empty() {
            return Err(Error::parse(path, 1, "reference dictionary has no entries"));
        }
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        ReferenceDictionary::from_pairs(name, pairs, pipeline)
    }

    /// A continuous reference carrying the generated dictionary's per-unit
    /// weights `coefficient / term_sd`, scaled into [-1, 1].
    pub fn from_generated(name: impl Into<String>, dict: &PolarityDictionary) -> ReferenceDictionary {
        let raw: Vec<(String, f64)> = dict
            .entries
            .iter()
            .map(|e| (e.term.clone(), e.coefficient / e.term_sd))
            .collect();
        let scale = raw.iter().fold(0.0f64, |m, (_, v)| m.max(v.abs()));
        ReferenceDictionary {
            name: name.into(),
            entries: raw.into_iter().map(|(t, v)| (t, v / scale)).collect(),
            value_kind: ValueKind::Continuous,
            tied_terms_dropped: 0,
            duplicates_merged: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaMetric {
    Nominal,
    Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub reference: String,
    pub generated_size: usize,
    pub reference_size: usize,
    pub overlap_count: usize,
    pub overlap_share: f64,
    pub consensus_count: usize,
    pub consensus_share: Option<f64>,
    pub pearson_correlation: Option<f64>,
    pub correlation_p_value: Option<f64>,
    pub krippendorff_alpha: Option<f64>,
    pub alpha_metric: AlphaMetric,
    pub tied_terms_dropped: usize,
}

/// Compares with the default metric: nominal on signs for binary references,
/// interval on values for continuous ones.
pub fn compare(generated: &PolarityDictionary, reference: &ReferenceDictionary) -> Result<ComparisonReport> {
    let metric = match reference.value_kind {
        ValueKind::Binary => AlphaMetric::Nominal,
        ValueKind::Continuous => AlphaMetric::Interval,
    };
    compare_with(generated, reference, metric)
}

/// With the interval metric, coefficients are divided by the largest absolute
/// coefficient so both raters share the [-1, 1] scale.
pub fn compare_with(
    generated: &PolarityDictionary,
    reference: &ReferenceDictionary,
    metric: AlphaMetric,
) -> Result<ComparisonReport> {
    if generated.is_empty() {
        return Err(Error::InvalidInput("generated dictionary is empty".into()));
    }
    if reference.is_empty() {
        return Err(Error::InvalidInput(format!("reference {:?} is empty", reference.name)));
    }
    let pairs: Vec<(f64, f64)> = generated
        .entries
        .iter()
        .filter_map(|e| reference.entries.get(&e.term).map(|&v| (e.coefficient, v)))
        .collect();
    let overlap_count = pairs.len();
    let consensus_count = pairs
        .iter()
        .filter(|(c, v)| *v != 0.0 && c.signum() == v.signum())
        .count();
    let (coefs, values): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
    let pearson_correlation = if overlap_count >= 2 { pearson(&coefs, &values) } else { None };
    let correlation_p_value = match pearson_correlation {
        Some(r) if overlap_count >= 3 => Some(correlation_p_value(r, overlap_count)),
        _ => None,
    };
    let ratings: Vec<(f64, f64)> = match metric {
        AlphaMetric::Nominal => pairs.iter().map(|(c, v)| (sign(*c), sign(*v))).collect(),
        AlphaMetric::Interval => {
            let scale = generated
                .entries
                .iter()
                .fold(0.0f64, |m, e| m.max(e.coefficient.abs()));
            pairs.iter().map(|(c, v)| (c / scale, *v)).collect()
        }
    };
    Ok(ComparisonReport {
        reference: reference.name.clone(),
        generated_size: generated.len(),
        reference_size: reference.len(),
        overlap_count,
        overlap_share: overlap_count as f64 / generated.len() as f64,
        consensus_count,
        consensus_share: (overlap_count > 0).then(|| consensus_count as f64 / overlap_count as f64),
        pearson_correlation,
        correlation_p_value,
        krippendorff_alpha: krippendorff_alpha(&ratings, metric),
        alpha_metric: metric,
        tied_terms_dropped: reference.tied_terms_dropped,
    })
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Pearson correlation; `None` when either side has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let ma = linalg::mean(a);
    let mb = linalg::mean(b);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Two-sided p-value of `H0: rho = 0` using `t = r sqrt((n-2) / (1-r^2))`.
pub fn correlation_p_value(r: f64, n: usize) -> f64 {
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let df = n as f64 - 2.0;
    student_t_two_sided(r * (df / (1.0 - r * r)).sqrt(), df)
}

/// Krippendorff's alpha for two raters who both rated every item.
///
/// Returns `None` for fewer than two items, or when all pooled values are
/// identical yet the raters disagree (which cannot happen with two raters,
/// so in practice identical pooled values give `Some(1.0)`).
///
/// ```
/// use polarlex::evaluation::{krippendorff_alpha, AlphaMetric};
///
/// let perfect = [(1.0, 1.0), (-1.0, -1.0), (1.0, 1.0)];
/// assert_eq!(krippendorff_alpha(&perfect, AlphaMetric::Nominal), Some(1.0));
/// ```
pub fn krippendorff_alpha(pairs: &[(f64, f64)], metric: AlphaMetric) -> Option<f64> {
    if pairs.len() < 2 {
        return None;
    }
    let n = 2.0 * pairs.len() as f64;
    let pooled: Vec<f64> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    // Each item adds the ordered pairs (a, b) and (b, a) to the coincidence
    // matrix with weight 1 / (m_u - 1) = 1.
    let (observed, expected) = match metric {
        AlphaMetric::Nominal => {
            let disagreements = pairs.iter().filter(|(a, b)| a != b).count() as f64;
            let mut counts: HashMap<u64, f64> = HashMap::new();
            for v in &pooled {
                *counts.entry(v.to_bits()).or_insert(0.0) += 1.0;
            }
            let same: f64 = counts.values().map(|c| c * c).sum();
            (2.0 * disagreements / n, (n * n - same) / (n * (n - 1.0)))
        }
        AlphaMetric::Interval => {
            let d: f64 = pairs.iter().map(|(a, b)| (a - b) * (a - b)).sum();
            let m = linalg::mean(&pooled);
            let ss: f64 = pooled.iter().map(|v| (v - m) * (v - m)).sum();
            // sum over ordered pairs i != j of (v_i - v_j)^2 = 2 n ss
            (2.0 * d / n, 2.0 * n * ss / (n * (n - 1.0)))
        }
    };
    if expected == 0.0 {
        return (observed == 0.0).then_some(1.0);
    }
    Some(1.0 - observed / expected)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub test_fraction: f64,
    pub split_seed: u64,
    pub model: ModelConfig,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            test_fraction: 0.2,
            split_seed: 42,
            model: ModelConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: String,
    pub mse: f64,
    /// Calibration `response = intercept + slope * net_polarity` (absent for the LASSO row).
    pub calibration: Option<(f64, f64)>,
    /// Share of test documents containing at least one dictionary term.
    pub test_coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub n_train: usize,
    pub n_test: usize,
    pub lasso_terms: usize,
    pub methods: Vec<MethodResult>,
}

impl BenchmarkReport {
    pub fn lasso_mse(&self) -> f64 {
        self.methods[0].mse
    }
}

/// Seeded train/test split: the first `round(n * test_fraction)` indices of a
/// shuffled order form the test set. Both halves come back sorted.
pub fn train_test_split(n: usize, test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!("test_fraction must lie in (0, 1), got {test_fraction}")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = (n as f64 * test_fraction).round() as usize;
    let mut test = perm[..n_test].to_vec();
    let mut train = perm[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}

/// Out-of-sample MSE of the LASSO dictionary and of each reference list.
///
/// The LASSO model is fit on the training split only. A reference list scores
/// a document by its net polarity `sum_t value_t * tfidf_t` (idf taken from the
/// training split), calibrated to the response by OLS on the training split.
pub fn predictive_benchmark(
    docs: &[TokenizedDocument],
    responses: &[f64],
    references: &[ReferenceDictionary],
    config: &BenchmarkConfig,
) -> Result<BenchmarkReport> {
    if docs.len() != responses.len() {
        return Err(Error::InvalidInput("documents and responses differ in length".into()));
    }
    if references.is_empty() {
        return Err(Error::InvalidInput("at least one reference dictionary is required".into()));
    }
    let (train, test) = train_test_split(docs.len(), config.test_fraction, config.split_seed)?;
    if test.len() < 10 {
        return Err(Error::InvalidInput(format!(
            "test split has {} documents; at least 10 are required",
            test.len()
        )));
    }
    let pick = |idx: &[usize]| -> (Vec<TokenizedDocument>, Vec<f64>) {
        (idx.iter().map(|&i| docs[i].clone()).collect(), idx.iter().map(|&i| responses[i]).collect())
    };
    let (train_docs, train_y) = pick(&train);
    let (test_docs, test_y) = pick(&test);

    let model = fit_model(&train_docs, &train_y, &config.model)?;
    let dict = &model.dictionary;
    let lasso_pred: Vec<f64> = test_docs.iter().map(|d| dict.predict_response(d)).collect();
    let mut methods = vec![MethodResult {
        method: "lasso".into(),
        mse: mse(&lasso_pred, &test_y),
        calibration: None,
        test_coverage: coverage(&test_docs, |t| dict.get(t).is_some()),
    }];

    let train_terms: Vec<Vec<String>> = train_docs.iter().map(TokenizedDocument::terms).collect();
    let test_terms: Vec<Vec<String>> = test_docs.iter().map(TokenizedDocument::terms).collect();
    let mut df: HashMap<&str, usize> = HashMap::new();
    for terms in &train_terms {
        let mut seen: Vec<&str> = terms.iter().map(String::as_str).collect();
        seen.sort_unstable();
        seen.dedup();
        for t in seen {
            *df.entry(t).or_insert(0) += 1;
        }
    }
    let n_train = train_docs.len() as f64;
    for reference in references {
        let weight = |t: &str| -> f64 {
            match (reference.entries.get(t), df.get(t)) {
                (Some(v), Some(&d)) => v * (n_train / d as f64).ln(),
                _ => 0.0,
            }
        };
        let polarity = |terms: &[String]| -> f64 { terms.iter().map(|t| weight(t)).sum() };
        let s_train: Vec<f64> = train_terms.iter().map(|t| polarity(t)).collect();
        let s_test: Vec<f64> = test_terms.iter().map(|t| polarity(t)).collect();
        let (a, b) = simple_ols(&s_train, &train_y);
        let pred: Vec<f64> = s_test.iter().map(|s| a + b * s).collect();
        methods.push(MethodResult {
            method: reference.name.clone(),
            mse: mse(&pred, &test_y),
            calibration: Some((a, b)),
            test_coverage: coverage(&test_docs, |t| reference.entries.contains_key(t)),
        });
    }
    Ok(BenchmarkReport {
        n_train: train.len(),
        n_test: test.len(),
        lasso_terms: dict.len(),
        methods,
    })
}

fn coverage(docs: &[TokenizedDocument], has: impl Fn(&str) -> bool) -> f64 {
    let hit = docs.iter().filter(|d| d.terms().iter().any(|t| has(t))).count();
    hit as f64 / docs.len() as f64
}

fn mse(pred: &[f64], y: &[f64]) -> f64 {
    pred.iter().zip(y).map(|(p, v)| (p - v) * (p - v)).sum::<f64>() / y.len() as f64
}

/// `(intercept, slope)`; a constant regressor gives slope 0.
fn simple_ols(x: &[f64], y: &[f64]) -> (f64, f64) {
    let mx = linalg::mean(x);
    let my = linalg::mean(y);
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return (my, 0.0);
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_item_fixture() {
        let pairs = [(1.0, 1.0), (1.0, -1.0), (-1.0, -1.0), (-1.0, 1.0)];
        let a = krippendorff_alpha(&pairs, AlphaMetric::Nominal).unwrap();
        assert!((a - 0.125).abs() < 1e-12);
    }

    #[test]
    fn one_disagreement_among_many() {
        let mut pairs = vec![(1.0, 1.0); 10];
        pairs.extend(vec![(-1.0, -1.0); 10]);
        pairs.push((1.0, -1.0));
        let a = krippendorff_alpha(&pairs, AlphaMetric::Nominal).unwrap();
        assert!(a > 0.0 && a < 1.0);
    }

    #[test]
    fn alpha_undefined_for_single_item() {
        assert_eq!(krippendorff_alpha(&[(1.0, 1.0)], AlphaMetric::Nominal), None);
        assert_eq!(krippendorff_alpha(&[(1.0, 1.0), (1.0, 1.0)], AlphaMetric::Nominal), Some(1.0));
    }

    #[test]
    fn interval_matches_pairwise_definition() {
        let pairs = [(0.2, 0.5), (-0.3, -0.1), (0.9, 0.4), (0.0, -0.6)];
        let pooled: Vec<f64> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
        let n = pooled.len() as f64;
        let mut de = 0.0;
        for (i, a) in pooled.iter().enumerate() {
            for (j, b) in pooled.iter().enumerate() {
                if i != j {
                    de += (a - b) * (a - b);
                }
            }
        }
        de /= n * (n - 1.0);
        let d_o: f64 = pairs.iter().map(|(a, b)| 2.0 * (a - b) * (a - b)).sum::<f64>() / n;
        let a = krippendorff_alpha(&pairs, AlphaMetric::Interval).unwrap();
        assert!((a - (1.0 - d_o / de)).abs() < 1e-14);
    }

    #[test]
    fn binary_duplicates_take_majority() {
        let p = PipelineConfig::default();
        let r = ReferenceDictionary::from_pairs(
            "r",
            [("loved", 1.0), ("loving", 1.0), ("love", -1.0), ("bad", -1.0), ("happy", 1.0), ("happiness", -1.0)],
            &p,
        )
        .unwrap();
        assert_eq!(r.value_kind, ValueKind::Binary);
        assert_eq!(r.entries.get("love"), Some(&1.0));
        assert_eq!(r.entries.get("bad"), Some(&-1.0));
        // happy / happiness both stem to "happi" and tie.
        assert_eq!(r.tied_terms_dropped, 1);
        assert!(!r.entries.contains_key("happi"));
    }

    #[test]
    fn continuous_detected_and_averaged() {
        let r = ReferenceDictionary::from_pairs(
            "r",
            [("good", 0.5), ("goods", 0.7), ("awful", -0.8)],
            &PipelineConfig::default(),
        )
        .unwrap();
        assert_eq!(r.value_kind, ValueKind::Continuous);
        assert!((r.entries["good"] - 0.6).abs() < 1e-15);
        assert!(ReferenceDictionary::from_pairs("r", [("x", 1.5)], &PipelineConfig::default()).is_err());
    }

    #[test]
    fn split_sizes() {
        let (train, test) = train_test_split(101, 0.2, 3).unwrap();
        assert_eq!(test.len(), 20);
        assert_eq!(train.len(), 81);
        let mut all = [train, test].concat();
        all.sort_unstable();
        assert_eq!(all, (0..101).collect::<Vec<_>>());
    }

    #[test]
    fn correlation_p_values() {
        assert_eq!(correlation_p_value(1.0, 10), 0.0);
        assert!((correlation_p_value(0.0, 10) - 1.0).abs() < 1e-15);
        assert_eq!(pearson(&[1.0, 1.0], &[0.0, 1.0]), None);
    }
}
