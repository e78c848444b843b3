//! Polarity dictionaries: construction from a selected LASSO model, scoring of
//! new documents and document halves, and the CSV + JSON file format.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dtm::{DocumentTermMatrix, ResponseVector, StandardizedMatrix, Weighting};
use crate::error::{Error, Result};
use crate::inference::PostLassoResult;
use crate::lasso::LassoPath;
use crate::linalg::DenseMatrix;
use crate::text_pipeline::{PipelineConfig, TokenizedDocument};

pub const FORMAT_VERSION: u32 = 1;

pub const CSV_HEADER: &str =
    "term,coefficient,std_error,t_stat,rel_doc_freq,pos_share,neg_share,term_mean,term_sd,term_idf";

/// How documents are split into positive and negative ones for the share columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShareThreshold {
    /// Above the corpus median response counts as positive.
    #[default]
    Median,
    /// Above zero counts as positive (natural for abnormal returns).
    Zero,
}

impl ShareThreshold {
    pub fn cutoff(self, responses: &[f64]) -> f64 {
        match self {
            ShareThreshold::Zero => 0.0,
            ShareThreshold::Median => median(responses),
        }
    }
}

pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DictionaryEntry {
    pub term: String,
    pub coefficient: f64,
    pub standard_error: f64,
    pub t_statistic: f64,
    pub relative_doc_frequency: f64,
    pub share_in_positive_docs: f64,
    pub share_in_negative_docs: f64,
    pub term_mean: f64,
    pub term_sd: f64,
    pub term_idf: f64,
}

impl DictionaryEntry {
    /// Standardized feature value for a raw count of this term.
    #[inline]
    pub fn standardized(&self, count: f64) -> f64 {
        (count * self.term_idf - self.term_mean) / self.term_sd
    }

    /// Contribution of a raw count: `coefficient * standardized(count)`.
    #[inline]
    pub fn contribution(&self, count: f64) -> f64 {
        self.coefficient * self.standardized(count)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DictionaryMetadata {
    pub format_version: u32,
    pub intercept: f64,
    pub lambda: f64,
    pub adjusted_r2: Option<f64>,
    pub n_documents: usize,
    pub n_candidate_terms: usize,
    pub n_positive: usize,
    pub n_negative: usize,
    pub weighting: Weighting,
    pub response_mean: f64,
    pub response_sd: f64,
    pub share_threshold: ShareThreshold,
    pub share_cutoff: f64,
    /// Terms dropped from the Post-LASSO refit as linearly dependent.
    pub refit_dropped_terms: Vec<String>,
    pub pipeline: PipelineConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolarityDictionary {
    pub entries: Vec<DictionaryEntry>,
    pub metadata: DictionaryMetadata,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentScore {
    pub doc_id: String,
    pub score: f64,
    pub contributing_terms: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfScores {
    pub mu1: f64,
    pub mu2: f64,
    pub mu: f64,
}

/// Everything needed to turn the selected fit into a dictionary.
pub struct DictionaryInputs<'a> {
    pub path: &'a LassoPath,
    /// Post-LASSO refit on the selected support; `None` when the support is empty.
    pub post: Option<&'a PostLassoResult>,
    /// The weighted (tf-idf or raw) matrix the standardized design came from.
    pub dtm: &'a DocumentTermMatrix,
    pub standardized: &'a StandardizedMatrix,
    /// Standardized responses (their mean and sd are recorded).
    pub responses: &'a ResponseVector,
    pub share_threshold: ShareThreshold,
    pub pipeline: &'a PipelineConfig,
}

pub fn build_dictionary(inputs: &DictionaryInputs<'_>) -> Result<PolarityDictionary> {
    let fit = inputs.path.selected_fit();
    let std = inputs.standardized;
    if fit.coefficients.len() != std.n_terms() {
        return Err(Error::InvalidInput("fit and standardized matrix disagree on term count".into()));
    }
    let se_by_term: HashMap<usize, (f64, f64)> = match inputs.post {
        Some(post) => {
            let mut expected = fit.active_set.clone();
            expected.sort_unstable();
            let mut got = post.support.clone();
            got.sort_unstable();
            if expected != got {
                return Err(Error::InvalidInput(
                    "post-LASSO support differs from the selected active set".into(),
                ));
            }
            post.support
                .iter()
                .enumerate()
                .map(|(k, &j)| (j, (post.standard_errors[k], 0.0)))
                .collect()
        }
        None if fit.active_set.is_empty() => HashMap::new(),
        None => return Err(Error::InvalidInput("post-LASSO result required for a non-empty support".into())),
    };
    if fit.active_set.is_empty() {
        log::warn!("selected model is empty; the dictionary has no entries (lambda too large)");
    }

    // Raw responses drive the positive / negative document split.
    let raw: Vec<f64> = inputs
        .responses
        .values
        .iter()
        .map(|&z| inputs.responses.unstandardize(z))
        .collect();
    let cutoff = inputs.share_threshold.cutoff(&raw);
    let dtm = inputs.dtm;
    let n_docs = dtm.n_docs();
    let mut pos_docs = vec![0usize; dtm.n_terms()];
    for (d, &r) in raw.iter().enumerate() {
        if r > cutoff {
            for &(j, _) in dtm.row(d) {
                pos_docs[j] += 1;
            }
        }
    }

    let mut entries: Vec<DictionaryEntry> = fit
        .active_set
        .iter()
        .map(|&j| {
            let src = std.source_columns[j];
            let df = dtm.column_stats()[src].document_frequency;
            let pos = pos_docs[src] as f64 / df as f64;
            let coefficient = fit.coefficients[j];
            let standard_error = se_by_term[&j].0;
            DictionaryEntry {
                term: std.vocabulary[j].clone(),
                coefficient,
                standard_error,
                t_statistic: crate::inference::t_statistic(coefficient, standard_error),
                relative_doc_frequency: df as f64 / n_docs as f64,
                share_in_positive_docs: pos,
                share_in_negative_docs: 1.0 - pos,
                term_mean: std.means[j],
                term_sd: std.std_devs[j],
                term_idf: std.idf[j],
            }
        })
        .collect();
    entries.sort_by(|a, b| {
        b.coefficient
            .total_cmp(&a.coefficient)
            .then_with(|| a.term.cmp(&b.term))
    });

    let refit_dropped_terms = inputs
        .post
        .map(|p| p.dropped.iter().map(|&j| std.vocabulary[j].clone()).collect())
        .unwrap_or_default();
    let metadata = DictionaryMetadata {
        format_version: FORMAT_VERSION,
        intercept: fit.intercept,
        lambda: fit.lambda,
        adjusted_r2: inputs.post.map(|p| p.adjusted_r2).filter(|v| v.is_finite()),
        n_documents: n_docs,
        n_candidate_terms: std.n_terms(),
        n_positive: entries.iter().filter(|e| e.coefficient > 0.0).count(),
        n_negative: entries.iter().filter(|e| e.coefficient < 0.0).count(),
        weighting: dtm.weighting(),
        response_mean: inputs.responses.mean,
        response_sd: inputs.responses.std_dev,
        share_threshold: inputs.share_threshold,
        share_cutoff: cutoff,
        refit_dropped_terms,
        pipeline: inputs.pipeline.clone(),
    };
    Ok(PolarityDictionary { entries, metadata })
}

fn count_terms<S: AsRef<str>>(terms: &[S]) -> HashMap<&str, f64> {
    let mut counts = HashMap::new();
    for t in terms {
        *counts.entry(t.as_ref()).or_insert(0.0) += 1.0;
    }
    counts
}

impl PolarityDictionary {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, term: &str) -> Option<&DictionaryEntry> {
        self.entries.iter().find(|e| e.term == term)
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.term.as_str())
    }

    /// Sum of contributions of absent terms: `sum_t -coef_t * mean_t / sd_t`.
    pub fn offset(&self) -> f64 {
        self.entries.iter().map(|e| e.contribution(0.0)).sum()
    }

    /// Score of a term stream (unigrams and/or n-grams) on the standardized
    /// response scale. Every dictionary term contributes, absent ones through
    /// their standardized-zero value.
    pub fn score_terms<S: AsRef<str>>(&self, doc_id: &str, terms: &[S]) -> DocumentScore {
        let counts = count_terms(terms);
        let contributing_terms: Vec<(String, f64)> = self
            .entries
            .iter()
            .map(|e| {
                let c = counts.get(e.term.as_str()).copied().unwrap_or(0.0);
                (e.term.clone(), e.contribution(c))
            })
            .collect();
        let score = self.metadata.intercept + contributing_terms.iter().map(|(_, c)| c).sum::<f64>();
        DocumentScore {
            doc_id: doc_id.to_owned(),
            score,
            contributing_terms,
        }
    }

    pub fn score_document(&self, doc: &TokenizedDocument) -> DocumentScore {
        self.score_terms(&doc.doc_id, &doc.terms())
    }

    fn contribution_sum<S: AsRef<str>>(&self, terms: &[S]) -> f64 {
        let counts = count_terms(terms);
        self.entries
            .iter()
            .map(|e| e.contribution(counts.get(e.term.as_str()).copied().unwrap_or(0.0)))
            .sum()
    }

    /// Intercept-free contribution sums for each half and the whole document.
    pub fn score_halves(&self, doc: &TokenizedDocument) -> HalfScores {
        let (first, second) = doc.half_terms();
        HalfScores {
            mu1: self.contribution_sum(&first),
            mu2: self.contribution_sum(&second),
            mu: self.contribution_sum(&doc.terms()),
        }
    }

    /// Score on the original response scale.
    pub fn predict_response(&self, doc: &TokenizedDocument) -> f64 {
        self.metadata.response_mean + self.metadata.response_sd * self.score_document(doc).score
    }

    /// Standardized features of the dictionary terms (columns in entry order).
    pub fn feature_matrix(&self, docs: &[TokenizedDocument]) -> DenseMatrix {
        let mut x = DenseMatrix::zeros(docs.len(), self.entries.len());
        for (i, d) in docs.iter().enumerate() {
            let terms = d.terms();
            let counts = count_terms(&terms);
            for (j, e) in self.entries.iter().enumerate() {
                x.set(i, j, e.standardized(counts.get(e.term.as_str()).copied().unwrap_or(0.0)));
            }
        }
        x
    }

    /// Canonical CSV body.
    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::with_capacity(64 * (self.entries.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for e in &self.entries {
            if e.term.contains([',', '"', '\n', '\r']) {
                return Err(Error::InvalidInput(format!(
                    "term {:?} cannot be written to the dictionary CSV",
                    e.term
                )));
            }
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                e.term,
                e.coefficient,
                e.standard_error,
                e.t_statistic,
                e.relative_doc_frequency,
                e.share_in_positive_docs,
                e.share_in_negative_docs,
                e.term_mean,
                e.term_sd,
                e.term_idf
            );
        }
        Ok(out)
    }

    pub fn metadata_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(&self.metadata)
            .map_err(|e| Error::InvalidInput(format!("cannot serialize metadata: {e}")))?;
        s.push('\n');
        Ok(s)
    }

    /// Writes `path` (CSV) and its `.json` sidecar.
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()?).map_err(|e| Error::io(path, e))?;
        let sidecar = sidecar_path(path);
        std::fs::write(&sidecar, self.metadata_json()?).map_err(|e| Error::io(&sidecar, e))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<PolarityDictionary> {
        let csv = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let sidecar = sidecar_path(path);
        let json = std::fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
        Self::parse(path, &csv, &sidecar, &json)
    }

    pub fn parse(csv_path: &Path, csv: &str, json_path: &Path, json: &str) -> Result<PolarityDictionary> {
        let metadata: DictionaryMetadata = serde_json::from_str(json).map_err(|e| {
            Error::parse(json_path, e.line(), format!("invalid dictionary metadata: {e}"))
        })?;
        if metadata.format_version != FORMAT_VERSION {
            return Err(Error::parse(
                json_path,
                1,
                format!("unsupported format_version {}", metadata.format_version),
            ));
        }
        let entries = parse_entries(csv_path, csv)?;
        let n_pos = entries.iter().filter(|e| e.coefficient > 0.0).count();
        if n_pos != metadata.n_positive || entries.len() - n_pos != metadata.n_negative {
            return Err(Error::parse(
                json_path,
                1,
                "n_positive / n_negative disagree with the CSV entries",
            ));
        }
        Ok(PolarityDictionary { entries, metadata })
    }
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

fn parse_entries(path: &Path, csv: &str) -> Result<Vec<DictionaryEntry>> {
    let mut lines = csv.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == CSV_HEADER => {}
        Some((_, h)) => {
            return Err(Error::parse(path, 1, format!("unexpected header {h:?}; expected {CSV_HEADER:?}")))
        }
        None => return Err(Error::parse(path, 1, "empty file")),
    }
    let names: Vec<&str> = CSV_HEADER.split(',').collect();
    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != names.len() {
            return Err(Error::parse(
                path,
                line_no,
                format!("expected {} fields, found {}", names.len(), fields.len()),
            ));
        }
        let num = |k: usize| -> Result<f64> {
            fields[k].parse::<f64>().map_err(|_| {
                Error::parse(path, line_no, format!("field {:?}: invalid number {:?}", names[k], fields[k]))
            })
        };
        let term = fields[0].to_owned();
        if term.is_empty() || term.chars().any(char::is_whitespace) {
            return Err(Error::parse(path, line_no, format!("field \"term\": invalid term {term:?}")));
        }
        if !seen.insert(term.clone()) {
            return Err(Error::parse(path, line_no, format!("duplicate term {term:?}")));
        }
        let e = DictionaryEntry {
            term,
            coefficient: num(1)?,
            standard_error: num(2)?,
            t_statistic: num(3)?,
            relative_doc_frequency: num(4)?,
            share_in_positive_docs: num(5)?,
            share_in_negative_docs: num(6)?,
            term_mean: num(7)?,
            term_sd: num(8)?,
            term_idf: num(9)?,
        };
        let bad = |msg: &str| Err(Error::parse(path, line_no, format!("term {:?}: {msg}", e.term)));
        if e.coefficient == 0.0 || !e.coefficient.is_finite() {
            return bad("coefficient must be finite and non-zero");
        }
        if e.standard_error.is_nan() || e.standard_error < 0.0 {
            return bad("standard error must be >= 0");
        }
        if !(e.term_sd > 0.0 && e.term_sd.is_finite()) {
            return bad("term_sd must be positive");
        }
        if !(0.0..=1.0).contains(&e.relative_doc_frequency) {
            return bad("rel_doc_freq must lie in [0, 1]");
        }
        if (e.share_in_positive_docs + e.share_in_negative_docs - 1.0).abs() > 1e-9 {
            return bad("pos_share + neg_share must equal 1");
        }
        entries.push(e);
    }
    Ok(entries)
}
