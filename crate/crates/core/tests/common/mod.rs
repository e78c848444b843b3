#![allow(dead_code)]

use polarlex::linalg::DenseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn standardize(v: &[f64]) -> Vec<f64> {
    let m = mean(v);
    let sd = (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() as f64 - 1.0)).sqrt();
    v.iter().map(|x| (x - m) / sd).collect()
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Standardized Gaussian design and a standardized response driven by the
/// first few columns.
pub fn instance(seed: u64, n: usize, p: usize) -> (DenseMatrix, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols: Vec<Vec<f64>> = (0..p)
        .map(|_| standardize(&(0..n).map(|_| normal(&mut rng)).collect::<Vec<_>>()))
        .collect();
    let beta: Vec<f64> = (0..p)
        .map(|j| if j < 3 { rng.random_range(-2.0..2.0) } else { 0.0 })
        .collect();
    let y: Vec<f64> = (0..n)
        .map(|i| (0..p).map(|j| cols[j][i] * beta[j]).sum::<f64>() + normal(&mut rng))
        .collect();
    (DenseMatrix::from_columns(&cols).unwrap(), standardize(&y))
}

/// `X_j^T (y - b0 - X b) / n` for every column.
pub fn correlations(x: &DenseMatrix, y: &[f64], b0: f64, beta: &[f64]) -> Vec<f64> {
    let n = y.len();
    let fitted = x.mul_vec(beta);
    let r: Vec<f64> = (0..n).map(|i| y[i] - b0 - fitted[i]).collect();
    (0..x.n_cols())
        .map(|j| x.column(j).iter().zip(&r).map(|(a, b)| a * b).sum::<f64>() / n as f64)
        .collect()
}

pub struct PlantedFit {
    pub corpus: polarlex::synthetic::PlantedCorpus,
    pub docs: Vec<polarlex::text_pipeline::TokenizedDocument>,
    pub model: polarlex::model::FittedModel,
}

/// A small planted-signal corpus fitted with the default model settings.
pub fn planted_fit(seed: u64, n_docs: usize, vocabulary_size: usize, n_planted: usize) -> PlantedFit {
    use polarlex::model::{fit_model, ModelConfig};
    use polarlex::synthetic::{planted_corpus, PlantedConfig};
    let corpus = planted_corpus(&PlantedConfig {
        n_docs,
        vocabulary_size,
        n_planted,
        min_doc_length: 30,
        max_doc_length: 60,
        seed,
        ..PlantedConfig::default()
    })
    .unwrap();
    let config = ModelConfig::default();
    let docs = corpus.tokenized(&config.pipeline);
    let model = fit_model(&docs, &corpus.responses, &config).unwrap();
    PlantedFit { corpus, docs, model }
}
