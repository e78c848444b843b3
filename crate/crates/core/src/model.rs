//! End-to-end fitting: tokenized corpus and responses in, dictionary out.

use serde::{Deserialize, Serialize};

use crate::dictionary::{build_dictionary, DictionaryInputs, PolarityDictionary, ShareThreshold};
use crate::dtm::{build_matrix, min_doc_frequency_for, DocumentTermMatrix, ResponseVector, StandardizedMatrix, Weighting};
use crate::error::{Error, Result};
use crate::inference::{post_lasso, vif, PostLassoResult, VifReport, DEFAULT_VIF_THRESHOLD};
use crate::lasso::{cross_validate, default_grid, lambda_max, CvConfig, LassoPath};
use crate::text_pipeline::{PipelineConfig, TokenizedDocument};

/// Rare-term cutoff, either as a share of documents (rounded up) or a count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MinDocFrequency {
    Fraction(f64),
    Count(usize),
}

impl Default for MinDocFrequency {
    fn default() -> Self {
        MinDocFrequency::Fraction(0.01)
    }
}

impl MinDocFrequency {
    pub fn resolve(self, n_docs: usize) -> Result<usize> {
        match self {
            MinDocFrequency::Count(0) => Err(Error::Config("min_doc_frequency must be at least 1".into())),
            MinDocFrequency::Count(c) => Ok(c),
            MinDocFrequency::Fraction(f) if !(0.0..=1.0).contains(&f) => Err(Error::Config(format!(
                "min_doc_frequency fraction must lie in [0, 1], got {f}"
            ))),
            MinDocFrequency::Fraction(f) => Ok(min_doc_frequency_for(n_docs, f)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub pipeline: PipelineConfig,
    pub weighting: Weighting,
    pub min_doc_frequency: MinDocFrequency,
    pub grid_points: usize,
    pub grid_ratio: f64,
    pub cv: CvConfig,
    pub share_threshold: ShareThreshold,
    pub vif_threshold: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            pipeline: PipelineConfig::default(),
            weighting: Weighting::Tfidf,
            min_doc_frequency: MinDocFrequency::default(),
            grid_points: 100,
            grid_ratio: 1e-3,
            cv: CvConfig::default(),
            share_threshold: ShareThreshold::Median,
            vif_threshold: DEFAULT_VIF_THRESHOLD,
        }
    }
}

/// Every intermediate of a fit, kept for reports.
#[derive(Debug, Clone)]
pub struct FittedModel {
    pub min_doc_frequency: usize,
    pub weighted: DocumentTermMatrix,
    pub standardized: StandardizedMatrix,
    pub response: ResponseVector,
    pub path: LassoPath,
    pub post: Option<PostLassoResult>,
    /// Full-model VIF when there are fewer terms than documents.
    pub vif: Option<VifReport>,
    pub dictionary: PolarityDictionary,
}

impl FittedModel {
    /// In-sample fitted values of the selected LASSO model (standardized scale).
    pub fn fitted_values(&self) -> Vec<f64> {
        self.path.selected_fit().predict(&self.standardized.x)
    }
}

pub fn fit_model(docs: &[TokenizedDocument], responses: &[f64], config: &ModelConfig) -> Result<FittedModel> {
    config.pipeline.validate()?;
    if docs.len() != responses.len() {
        return Err(Error::InvalidInput(format!(
            "{} documents but {} responses",
            docs.len(),
            responses.len()
        )));
    }
    let min_df = config.min_doc_frequency.resolve(docs.len())?;
    let raw = build_matrix(docs, min_df)?;
    let weighted = match config.weighting {
        Weighting::RawTf => raw,
        Weighting::Tfidf => raw.apply_tfidf()?,
    };
    let standardized = weighted.standardize();
    if standardized.n_terms() == 0 {
        return Err(Error::InvalidCorpus("no terms survive filtering".into()));
    }
    let response = ResponseVector::new(responses.to_vec())?.standardize()?;
    let x = &standardized.x;
    let y = &response.values;
    let grid = default_grid(lambda_max(x, y)?, config.grid_points, config.grid_ratio)?;
    let path = cross_validate(x, y, &grid, &config.cv)?;
    let fit = path.selected_fit();
    let post = if fit.active_set.is_empty() {
        None
    } else {
        Some(post_lasso(x, y, &fit.active_set)?)
    };
    let vif = if standardized.n_terms() >= 2 && standardized.n_terms() < standardized.n_docs() {
        match vif(x, None, config.vif_threshold) {
            Ok(r) => Some(r),
            Err(e) => {
                log::warn!("VIF not reported: {e}");
                None
            }
        }
    } else {
        None
    };
    let dictionary = build_dictionary(&DictionaryInputs {
        path: &path,
        post: post.as_ref(),
        dtm: &weighted,
        standardized: &standardized,
        responses: &response,
        share_threshold: config.share_threshold,
        pipeline: &config.pipeline,
    })?;
    Ok(FittedModel {
        min_doc_frequency: min_df,
        weighted,
        standardized,
        response,
        path,
        post,
        vif,
        dictionary,
    })
}
