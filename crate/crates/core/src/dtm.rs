//! Sparse document-term matrices, tf-idf weighting and column standardization.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, DenseMatrix};
use crate::text_pipeline::TokenizedDocument;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    RawTf,
    Tfidf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub document_frequency: usize,
    pub mean: f64,
    pub std_dev: f64,
}

/// Sparse (document x term) weights. Rows hold `(term index, weight)` pairs
/// sorted by term index; zeros are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentTermMatrix {
    doc_ids: Vec<String>,
    vocabulary: Vec<String>,
    rows: Vec<Vec<(usize, f64)>>,
    column_stats: Vec<ColumnStats>,
    idf: Vec<f64>,
    weighting: Weighting,
}

/// Raw term counts for every document, keeping terms that occur in at least
/// `min_doc_frequency` documents. The vocabulary is sorted lexicographically.
///
/// ```
/// use polarlex::dtm::build_matrix;
/// use polarlex::text_pipeline::TokenizedDocument;
///
/// let docs = vec![
///     TokenizedDocument::unigrams("d1", ["a", "b", "a"]),
///     TokenizedDocument::unigrams("d2", ["b"]),
/// ];
/// let m = build_matrix(&docs, 2).unwrap();
/// assert_eq!(m.vocabulary(), ["b"]);
/// ```
pub fn build_matrix(docs: &[TokenizedDocument], min_doc_frequency: usize) -> Result<DocumentTermMatrix> {
    if docs.len() < 2 {
        return Err(Error::InvalidCorpus(format!(
            "at least 2 documents are required, got {}",
            docs.len()
        )));
    }
    if min_doc_frequency == 0 {
        return Err(Error::Config("min_doc_frequency must be at least 1".into()));
    }
    let counts: Vec<HashMap<String, usize>> = docs
        .iter()
        .map(|d| {
            let mut c = HashMap::new();
            for t in d.terms() {
                *c.entry(t).or_insert(0) += 1;
            }
            c
        })
        .collect();
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for c in &counts {
        for t in c.keys() {
            *df.entry(t.as_str()).or_insert(0) += 1;
        }
    }
    let vocabulary: Vec<String> = df
        .iter()
        .filter(|(_, &n)| n >= min_doc_frequency)
        .map(|(t, _)| (*t).to_owned())
        .collect();
    let index: HashMap<&str, usize> = vocabulary
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i))
        .collect();
    let rows = counts
        .iter()
        .map(|c| {
            let mut row: Vec<(usize, f64)> = c
                .iter()
                .filter_map(|(t, &n)| index.get(t.as_str()).map(|&j| (j, n as f64)))
                .collect();
            row.sort_unstable_by_key(|e| e.0);
            row
        })
        .collect();
    let mut m = DocumentTermMatrix {
        doc_ids: docs.iter().map(|d| d.doc_id.clone()).collect(),
        idf: vec![1.0; vocabulary.len()],
        vocabulary,
        rows,
        column_stats: Vec::new(),
        weighting: Weighting::RawTf,
    };
    m.refresh_stats();
    Ok(m)
}

/// `ceil(fraction * n_docs)`, at least 1.
pub fn min_doc_frequency_for(n_docs: usize, fraction: f64) -> usize {
    ((fraction * n_docs as f64).ceil() as usize).max(1)
}

impl DocumentTermMatrix {
    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn column_stats(&self) -> &[ColumnStats] {
        &self.column_stats
    }

    /// Inverse document frequency per term (all ones before tf-idf weighting).
    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn weighting(&self) -> Weighting {
        self.weighting
    }

    pub fn n_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn n_terms(&self) -> usize {
        self.vocabulary.len()
    }

    /// Stored entries of one document as `(term index, weight)`.
    pub fn row(&self, doc: usize) -> &[(usize, f64)] {
        &self.rows[doc]
    }

    pub fn get(&self, doc: usize, term: usize) -> f64 {
        let row = &self.rows[doc];
        row.binary_search_by_key(&term, |e| e.0)
            .map(|k| row[k].1)
            .unwrap_or(0.0)
    }

    pub fn term_index(&self, term: &str) -> Option<usize> {
        self.vocabulary.binary_search_by(|t| t.as_str().cmp(term)).ok()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    fn refresh_stats(&mut self) {
        let n = self.n_docs() as f64;
        let p = self.n_terms();
        let mut df = vec![0usize; p];
        let mut sum = vec![0.0; p];
        for row in &self.rows {
            for &(j, w) in row {
                df[j] += 1;
                sum[j] += w;
            }
        }
        let means: Vec<f64> = sum.iter().map(|s| s / n).collect();
        // Sum of squared deviations including the implicit zeros.
        let mut ss: Vec<f64> = (0..p)
            .map(|j| (n - df[j] as f64) * means[j] * means[j])
            .collect();
        for row in &self.rows {
            for &(j, w) in row {
                ss[j] += (w - means[j]) * (w - means[j]);
            }
        }
        self.column_stats = (0..p)
            .map(|j| ColumnStats {
                document_frequency: df[j],
                mean: means[j],
                std_dev: (ss[j] / (n - 1.0)).sqrt(),
            })
            .collect();
    }

    /// Weights every count by `ln(|D| / df(t))`. Terms present in every
    /// document become identically zero and are removed.
    pub fn apply_tfidf(&self) -> Result<DocumentTermMatrix> {
        if self.weighting != Weighting::RawTf {
            return Err(Error::InvalidState("matrix is already tf-idf weighted".into()));
        }
        let n = self.n_docs() as f64;
        let keep: Vec<usize> = (0..self.n_terms())
            .filter(|&j| self.column_stats[j].document_frequency < self.n_docs())
            .collect();
        let mut remap = vec![usize::MAX; self.n_terms()];
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = new;
        }
        let idf: Vec<f64> = keep
            .iter()
            .map(|&j| (n / self.column_stats[j].document_frequency as f64).ln())
            .collect();
        let rows = self
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .filter(|(j, _)| remap[*j] != usize::MAX)
                    .map(|&(j, x)| (remap[j], x * idf[remap[j]]))
                    .collect()
            })
            .collect();
        let mut m = DocumentTermMatrix {
            doc_ids: self.doc_ids.clone(),
            vocabulary: keep.iter().map(|&j| self.vocabulary[j].clone()).collect(),
            rows,
            column_stats: Vec::new(),
            idf,
            weighting: Weighting::Tfidf,
        };
        m.refresh_stats();
        Ok(m)
    }

    /// Dense, column-standardized copy (sample standard deviation). Columns
    /// with zero variance are dropped and listed in `dropped_terms`.
    pub fn standardize(&self) -> StandardizedMatrix {
        let n = self.n_docs();
        let keep: Vec<usize> = (0..self.n_terms())
            .filter(|&j| self.column_stats[j].std_dev > 0.0)
            .collect();
        let dropped_terms: Vec<String> = (0..self.n_terms())
            .filter(|&j| self.column_stats[j].std_dev <= 0.0)
            .map(|j| self.vocabulary[j].clone())
            .collect();
        for t in &dropped_terms {
            log::warn!("dropping zero-variance term {t:?}");
        }
        let mut pos = vec![usize::MAX; self.n_terms()];
        for (k, &j) in keep.iter().enumerate() {
            pos[j] = k;
        }
        let mut x = DenseMatrix::zeros(n, keep.len());
        for (k, &j) in keep.iter().enumerate() {
            let ColumnStats { mean, std_dev, .. } = self.column_stats[j];
            x.column_mut(k).fill(-mean / std_dev);
        }
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                let k = pos[j];
                if k != usize::MAX {
                    let ColumnStats { mean, std_dev, .. } = self.column_stats[j];
                    x.set(i, k, (w - mean) / std_dev);
                }
            }
        }
        // Re-centre to remove the rounding residue of (w - mean) / sd.
        for k in 0..keep.len() {
            let col = x.column_mut(k);
            let m = linalg::mean(col);
            col.iter_mut().for_each(|v| *v -= m);
        }
        StandardizedMatrix {
            doc_ids: self.doc_ids.clone(),
            vocabulary: keep.iter().map(|&j| self.vocabulary[j].clone()).collect(),
            source_columns: keep.clone(),
            means: keep.iter().map(|&j| self.column_stats[j].mean).collect(),
            std_devs: keep.iter().map(|&j| self.column_stats[j].std_dev).collect(),
            idf: keep.iter().map(|&j| self.idf[j]).collect(),
            x,
            dropped_terms,
        }
    }

    /// Sparse triplet CSV (`doc_id,term,weight`), documents in corpus order
    /// and terms in vocabulary order.
    pub fn triplets_csv(&self) -> String {
        let mut out = String::from("doc_id,term,weight\n");
        for (doc, row) in self.doc_ids.iter().zip(&self.rows) {
            for &(j, w) in row {
                let _ = writeln!(out, "{},{},{}", doc, self.vocabulary[j], w);
            }
        }
        out
    }

    /// Vocabulary sidecar (`term,document_frequency,idf,mean,std_dev`).
    pub fn vocabulary_csv(&self) -> String {
        let mut out = String::from("term,document_frequency,idf,mean,std_dev\n");
        for (t, (s, idf)) in self.vocabulary.iter().zip(self.column_stats.iter().zip(&self.idf)) {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                t, s.document_frequency, idf, s.mean, s.std_dev
            );
        }
        out
    }

    /// Writes `<stem>.triplets.csv` and `<stem>.vocab.csv` into `dir`.
    pub fn export(&self, dir: &Path, stem: &str) -> Result<()> {
        let triplets = dir.join(format!("{stem}.triplets.csv"));
        std::fs::write(&triplets, self.triplets_csv()).map_err(|e| Error::io(&triplets, e))?;
        let vocab = dir.join(format!("{stem}.vocab.csv"));
        std::fs::write(&vocab, self.vocabulary_csv()).map_err(|e| Error::io(&vocab, e))?;
        Ok(())
    }
}

/// Dense standardized design: every column has mean 0 and sample standard
/// deviation 1 over all documents.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedMatrix {
    pub doc_ids: Vec<String>,
    pub vocabulary: Vec<String>,
    /// Column index of each term in the source [`DocumentTermMatrix`].
    pub source_columns: Vec<usize>,
    pub means: Vec<f64>,
    pub std_devs: Vec<f64>,
    pub idf: Vec<f64>,
    pub x: DenseMatrix,
    pub dropped_terms: Vec<String>,
}

impl StandardizedMatrix {
    pub fn n_docs(&self) -> usize {
        self.x.n_rows()
    }

    pub fn n_terms(&self) -> usize {
        self.x.n_cols()
    }
}

/// Per-document response aligned with the corpus order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseVector {
    pub values: Vec<f64>,
    pub standardized: bool,
    /// Mean and sample standard deviation of the original values, set once
    /// standardized.
    pub mean: f64,
    pub std_dev: f64,
}

impl ResponseVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("response {i} is not finite")));
        }
        Ok(ResponseVector {
            values,
            standardized: false,
            mean: 0.0,
            std_dev: 1.0,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Centres and scales by the sample standard deviation.
    pub fn standardize(&self) -> Result<ResponseVector> {
        if self.standardized {
            return Err(Error::InvalidState("response is already standardized".into()));
        }
        if self.values.len() < 2 {
            return Err(Error::InvalidInput("at least two responses are required".into()));
        }
        let mean = linalg::mean(&self.values);
        let sd = linalg::sample_variance(&self.values).sqrt();
        if sd <= 0.0 {
            return Err(Error::InvalidInput("response has zero variance".into()));
        }
        Ok(ResponseVector {
            values: self.values.iter().map(|v| (v - mean) / sd).collect(),
            standardized: true,
            mean,
            std_dev: sd,
        })
    }

    /// Maps a standardized value back to the response scale.
    pub fn unstandardize(&self, z: f64) -> f64 {
        if self.standardized {
            self.mean + self.std_dev * z
        } else {
            z
        }
    }
}
