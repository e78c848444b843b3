//! The TOML run configuration read by `polarlex build`.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use polarlex::dictionary::ShareThreshold;
use polarlex::dtm::Weighting;
use polarlex::lasso::{CvConfig, SelectionRule, SolverSettings, DEFAULT_FOLD_SEED};
use polarlex::model::{MinDocFrequency, ModelConfig};
use polarlex::text_pipeline::{default_stopwords, load_stopwords, PipelineConfig, Stemmer};
use serde::{Deserialize, Serialize};

use crate::UsageError;

/// Every field is written out when the config is saved, so a manifest copy
/// is self-describing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Directory of `<doc_id>.txt` files.
    pub corpus_path: PathBuf,
    /// CSV with header `doc_id,<name>`.
    pub response_path: PathBuf,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub pipeline: PipelineSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub lasso: LassoSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineSection {
    pub lowercase: bool,
    pub strip_punctuation_and_digits: bool,
    /// `"bundled"`, `"none"` or a path to a stop-word file.
    pub stopwords: String,
    pub stemmer: Stemmer,
    pub ngram_orders: BTreeSet<usize>,
    pub min_token_length: usize,
}

impl Default for PipelineSection {
    fn default() -> Self {
        let p = PipelineConfig::default();
        PipelineSection {
            lowercase: p.lowercase,
            strip_punctuation_and_digits: p.strip_punctuation_and_digits,
            stopwords: "bundled".into(),
            stemmer: p.stemmer,
            ngram_orders: p.ngram_orders,
            min_token_length: p.min_token_length,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub weighting: Weighting,
    pub min_doc_frequency: MinDocFrequency,
    pub share_threshold: ShareThreshold,
    pub vif_threshold: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let m = ModelConfig::default();
        ModelSection {
            weighting: m.weighting,
            min_doc_frequency: m.min_doc_frequency,
            share_threshold: m.share_threshold,
            vif_threshold: m.vif_threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LassoSection {
    pub n_folds: usize,
    pub grid_points: usize,
    pub grid_ratio: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub selection_rule: SelectionRule,
    pub fold_seed: u64,
}

impl Default for LassoSection {
    fn default() -> Self {
        let m = ModelConfig::default();
        let s = SolverSettings::default();
        LassoSection {
            n_folds: m.cv.n_folds,
            grid_points: m.grid_points,
            grid_ratio: m.grid_ratio,
            tol: s.tol,
            max_iter: s.max_iter,
            selection_rule: SelectionRule::Min,
            fold_seed: DEFAULT_FOLD_SEED,
        }
    }
}

impl RunConfig {
    pub fn new(corpus_path: impl Into<PathBuf>, response_path: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            corpus_path: corpus_path.into(),
            response_path: response_path.into(),
            output_dir: output_dir.into(),
            pipeline: PipelineSection::default(),
            model: ModelSection::default(),
            lasso: LassoSection::default(),
        }
    }

    pub fn parse(text: &str) -> Result<RunConfig> {
        toml::from_str(text).map_err(|e| UsageError(format!("invalid run configuration: {e}")).into())
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Resolves relative paths against `base` (the config file's directory).
    pub fn resolved(&self, base: &Path) -> RunConfig {
        let fix = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        let mut out = self.clone();
        out.corpus_path = fix(&self.corpus_path);
        out.response_path = fix(&self.response_path);
        out.output_dir = fix(&self.output_dir);
        if !matches!(self.pipeline.stopwords.as_str(), "bundled" | "none") {
            out.pipeline.stopwords = fix(Path::new(&self.pipeline.stopwords)).display().to_string();
        }
        out
    }

    /// Stop-word file named by the config, if any.
    pub fn stopword_file(&self) -> Option<PathBuf> {
        match self.pipeline.stopwords.as_str() {
            "bundled" | "none" => None,
            p => Some(PathBuf::from(p)),
        }
    }

    pub fn pipeline_config(&self) -> Result<PipelineConfig> {
        let p = &self.pipeline;
        let stopwords = match p.stopwords.as_str() {
            "bundled" => default_stopwords(),
            "none" => BTreeSet::new(),
            path => load_stopwords(Path::new(path))?,
        };
        let config = PipelineConfig {
            lowercase: p.lowercase,
            strip_punctuation_and_digits: p.strip_punctuation_and_digits,
            stopwords,
            stemmer: p.stemmer,
            ngram_orders: p.ngram_orders.clone(),
            min_token_length: p.min_token_length,
        };
        config.validate().map_err(|e| UsageError(e.to_string()))?;
        Ok(config)
    }

    pub fn model_config(&self) -> Result<ModelConfig> {
        let l = &self.lasso;
        if l.n_folds < 2 {
            bail!(UsageError(format!("lasso.n_folds must be at least 2, got {}", l.n_folds)));
        }
        Ok(ModelConfig {
            pipeline: self.pipeline_config()?,
            weighting: self.model.weighting,
            min_doc_frequency: self.model.min_doc_frequency,
            grid_points: l.grid_points,
            grid_ratio: l.grid_ratio,
            cv: CvConfig {
                n_folds: l.n_folds,
                fold_seed: l.fold_seed,
                selection_rule: l.selection_rule,
                solver: SolverSettings {
                    tol: l.tol,
                    max_iter: l.max_iter,
                },
            },
            share_threshold: self.model.share_threshold,
            vif_threshold: self.model.vif_threshold,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_materializes_defaults() {
        let c = RunConfig::parse("corpus_path = \"c\"\nresponse_path = \"r.csv\"\noutput_dir = \"out\"\n").unwrap();
        assert_eq!(c, RunConfig::new("c", "r.csv", "out"));
        let text = c.to_toml().unwrap();
        assert!(text.contains("fold_seed"));
        assert_eq!(RunConfig::parse(&text).unwrap(), c);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::parse("corpus_path = \"c\"\nresponse_path = \"r\"\noutput_dir = \"o\"\n[lasso]\nfolds = 3\n");
        assert!(err.unwrap_err().downcast_ref::<UsageError>().is_some());
    }

    #[test]
    fn min_doc_frequency_forms() {
        let base = "corpus_path = \"c\"\nresponse_path = \"r\"\noutput_dir = \"o\"\n[model]\n";
        let c = RunConfig::parse(&format!("{base}min_doc_frequency = {{ count = 3 }}\n")).unwrap();
        assert_eq!(c.model.min_doc_frequency, MinDocFrequency::Count(3));
        let c = RunConfig::parse(&format!("{base}min_doc_frequency = {{ fraction = 0.05 }}\n")).unwrap();
        assert_eq!(c.model.min_doc_frequency, MinDocFrequency::Fraction(0.05));
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let c = RunConfig::new("c", "/abs/r.csv", "o").resolved(Path::new("/base"));
        assert_eq!(c.corpus_path, Path::new("/base/c"));
        assert_eq!(c.response_path, Path::new("/abs/r.csv"));
    }
}
