//! Synthetic corpora with a known answer, for tests and demonstrations.
//!
//! Documents are made of pseudo-words that the default pipeline leaves
//! untouched (no stop words, stable under stemming), so the generated text and
//! its term stream agree one-to-one.

use std::fmt::Write as _;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::text_pipeline::{PipelineConfig, TokenizedDocument};

/// `count` distinct words that the default pipeline maps to themselves.
pub fn pseudo_words(count: usize) -> Vec<String> {
    const ONSETS: [&str; 12] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "t", "v"];
    const VOWELS: [&str; 3] = ["a", "o", "u"];
    const CODAS: [&str; 6] = ["k", "m", "p", "t", "r", "n"];
    let config = PipelineConfig::default();
    let mut out = Vec::with_capacity(count);
    'outer: for o1 in ONSETS {
        for v1 in VOWELS {
            for o2 in ONSETS {
                for v2 in VOWELS {
                    for c in CODAS {
                        let w = format!("{o1}{v1}{o2}{v2}{c}");
                        if config.stemmer.stem(&w) == w && !config.stopwords.contains(&w) {
                            out.push(w);
                            if out.len() == count {
                                break 'outer;
                            }
                        }
                    }
                }
            }
        }
    }
    assert_eq!(out.len(), count, "pseudo-word space exhausted");
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedConfig {
    pub n_docs: usize,
    pub vocabulary_size: usize,
    pub n_planted: usize,
    /// Variance of the signal over the variance of the noise.
    pub signal_to_noise: f64,
    pub min_doc_length: usize,
    pub max_doc_length: usize,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            n_docs: 2000,
            vocabulary_size: 500,
            n_planted: 20,
            signal_to_noise: 5.0,
            min_doc_length: 60,
            max_doc_length: 140,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedCorpus {
    pub doc_ids: Vec<String>,
    pub texts: Vec<String>,
    pub responses: Vec<f64>,
    /// Planted terms with their true coefficients on standardized tf-idf.
    pub planted: Vec<(String, f64)>,
    pub vocabulary: Vec<String>,
}

impl PlantedCorpus {
    pub fn tokenized(&self, config: &PipelineConfig) -> Vec<TokenizedDocument> {
        self.doc_ids
            .iter()
            .zip(&self.texts)
            .map(|(id, t)| TokenizedDocument::from_text(id.clone(), t, config))
            .collect()
    }

    /// Writes `<dir>/corpus/<doc_id>.txt` and `<dir>/responses.csv`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        write_corpus(dir, &self.doc_ids, &self.texts, &self.responses)
    }
}

pub(crate) fn write_corpus(dir: &Path, ids: &[String], texts: &[String], responses: &[f64]) -> Result<()> {
    let corpus = dir.join("corpus");
    std::fs::create_dir_all(&corpus).map_err(|e| Error::io(&corpus, e))?;
    for (id, text) in ids.iter().zip(texts) {
        let p = corpus.join(format!("{id}.txt"));
        std::fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
    }
    let mut csv = String::from("doc_id,value\n");
    for (id, y) in ids.iter().zip(responses) {
        let _ = writeln!(csv, "{id},{y}");
    }
    let p = dir.join("responses.csv");
    std::fs::write(&p, csv).map_err(|e| Error::io(&p, e))
}

/// A corpus whose response is a sparse linear function of standardized tf-idf
/// features plus Gaussian noise.
///
/// Word frequencies follow a Zipf-like law; the planted terms are spread over
/// the middle of the frequency range. Coefficients alternate in sign with
/// magnitudes between 0.5 and 1.5.
pub fn planted_corpus(config: &PlantedConfig) -> Result<PlantedCorpus> {
    let PlantedConfig {
        n_docs,
        vocabulary_size: p,
        n_planted: k,
        signal_to_noise,
        min_doc_length,
        max_doc_length,
        seed,
    } = *config;
    if n_docs < 2 || p < 2 || k == 0 || k > p / 2 || min_doc_length == 0 || max_doc_length < min_doc_length {
        return Err(Error::Config("inconsistent synthetic corpus settings".into()));
    }
    if signal_to_noise.is_nan() || signal_to_noise <= 0.0 {
        return Err(Error::Config("signal_to_noise must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vocabulary = pseudo_words(p);
    vocabulary.shuffle(&mut rng);
    let weights: Vec<f64> = (0..p).map(|r| 1.0 / (r as f64 + 10.0)).collect();
    let sampler = WeightedIndex::new(&weights).map_err(|e| Error::Config(e.to_string()))?;

    let mut counts = vec![vec![0u32; p]; n_docs];
    for row in counts.iter_mut() {
        let len = rng.random_range(min_doc_length..=max_doc_length);
        for _ in 0..len {
            row[sampler.sample(&mut rng)] += 1;
        }
    }
    let texts: Vec<String> = counts
        .iter()
        .map(|row| {
            let mut tokens: Vec<&str> = Vec::new();
            for (j, &c) in row.iter().enumerate() {
                tokens.extend(std::iter::repeat(vocabulary[j].as_str()).take(c as usize));
            }
            tokens.shuffle(&mut rng);
            tokens.join(" ")
        })
        .collect();

    // Planted ranks spaced over the middle of the frequency range.
    let lo = p / 20;
    let hi = p / 2;
    let planted_ranks: Vec<usize> = (0..k).map(|i| lo + i * (hi - lo) / k).collect();
    let coefs: Vec<f64> = (0..k)
        .map(|i| {
            let mag = 0.5 + rng.random::<f64>();
            if i % 2 == 0 {
                mag
            } else {
                -mag
            }
        })
        .collect();

    let n = n_docs as f64;
    let mut signal = vec![0.0; n_docs];
    for (&j, &c) in planted_ranks.iter().zip(&coefs) {
        let df = counts.iter().filter(|r| r[j] > 0).count();
        if df == 0 || df == n_docs {
            return Err(Error::Config("a planted term has no variance; use more documents".into()));
        }
        let idf = (n / df as f64).ln();
        let col: Vec<f64> = counts.iter().map(|r| r[j] as f64 * idf).collect();
        let m = linalg::mean(&col);
        let sd = linalg::sample_variance(&col).sqrt();
        for (s, v) in signal.iter_mut().zip(&col) {
            *s += c * (v - m) / sd;
        }
    }
    let noise_sd = (linalg::sample_variance(&signal) / signal_to_noise).sqrt();
    let normal = Normal::new(0.0, noise_sd).map_err(|e| Error::Config(e.to_string()))?;
    let responses: Vec<f64> = signal.iter().map(|s| s + normal.sample(&mut rng)).collect();

    let width = (n_docs - 1).to_string().len();
    Ok(PlantedCorpus {
        doc_ids: (0..n_docs).map(|i| format!("doc{i:0width$}")).collect(),
        texts,
        responses,
        planted: planted_ranks
            .iter()
            .zip(&coefs)
            .map(|(&j, &c)| (vocabulary[j].clone(), c))
            .collect(),
        vocabulary,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacementCorpus {
    pub doc_ids: Vec<String>,
    pub texts: Vec<String>,
    pub responses: Vec<f64>,
    pub positive_words: Vec<String>,
    pub negative_words: Vec<String>,
}

impl PlacementCorpus {
    pub fn tokenized(&self, config: &PipelineConfig) -> Vec<TokenizedDocument> {
        self.doc_ids
            .iter()
            .zip(&self.texts)
            .map(|(id, t)| TokenizedDocument::from_text(id.clone(), t, config))
            .collect()
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        write_corpus(dir, &self.doc_ids, &self.texts, &self.responses)
    }
}

/// Documents whose negative words all sit in the second half and whose
/// positive words sit in the first half. The response is the number of
/// positive minus negative words plus noise.
pub fn placement_corpus(n_docs: usize, seed: u64) -> PlacementCorpus {
    let words = pseudo_words(60);
    let positive_words = words[..10].to_vec();
    let negative_words = words[10..20].to_vec();
    let neutral = &words[20..];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 0.5).expect("valid sd");
    let mut texts = Vec::with_capacity(n_docs);
    let mut responses = Vec::with_capacity(n_docs);
    for _ in 0..n_docs {
        let half = 30;
        let n_pos = rng.random_range(0..6);
        let n_neg = rng.random_range(0..6);
        let mut first: Vec<&str> = (0..half - n_pos).map(|_| neutral[rng.random_range(0..neutral.len())].as_str()).collect();
        first.extend((0..n_pos).map(|_| positive_words[rng.random_range(0..10)].as_str()));
        first.shuffle(&mut rng);
        let mut second: Vec<&str> = (0..half - n_neg).map(|_| neutral[rng.random_range(0..neutral.len())].as_str()).collect();
        second.extend((0..n_neg).map(|_| negative_words[rng.random_range(0..10)].as_str()));
        second.shuffle(&mut rng);
        first.extend(second);
        texts.push(first.join(" "));
        responses.push(n_pos as f64 - n_neg as f64 + normal.sample(&mut rng));
    }
    let width = (n_docs.max(2) - 1).to_string().len();
    PlacementCorpus {
        doc_ids: (0..n_docs).map(|i| format!("doc{i:0width$}")).collect(),
        texts,
        responses,
        positive_words,
        negative_words,
    }
}
