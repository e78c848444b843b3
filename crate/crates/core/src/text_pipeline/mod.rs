//! Raw text to stemmed term streams.
//!
//! The pipeline lowercases, replaces every non-alphabetic character with a
//! space, splits on whitespace, drops stop words (matched on the surface
//! form), drops tokens shorter than `min_token_length` and finally stems.
//! n-grams are formed afterwards from the stemmed unigram stream.

mod porter;

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use porter::porter_stem;

/// Separator used when joining the stems of an n-gram into one term.
pub const NGRAM_SEPARATOR: char = '_';

const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stemmer {
    None,
    Porter,
}

impl Stemmer {
    pub fn stem(self, word: &str) -> String {
        match self {
            Stemmer::None => word.to_owned(),
            Stemmer::Porter => porter_stem(word),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub lowercase: bool,
    pub strip_punctuation_and_digits: bool,
    pub stopwords: BTreeSet<String>,
    pub stemmer: Stemmer,
    pub ngram_orders: BTreeSet<usize>,
    pub min_token_length: usize,
}

impl Default for PipelineConfig {
    /// Lowercasing, punctuation stripping, the bundled English stop list,
    /// Porter stemming, unigrams only and a minimum token length of 2.
    fn default() -> Self {
        PipelineConfig {
            lowercase: true,
            strip_punctuation_and_digits: true,
            stopwords: default_stopwords(),
            stemmer: Stemmer::Porter,
            ngram_orders: BTreeSet::from([1]),
            min_token_length: 2,
        }
    }
}

impl PipelineConfig {
    /// A pipeline that only splits on whitespace.
    pub fn identity() -> Self {
        PipelineConfig {
            lowercase: false,
            strip_punctuation_and_digits: false,
            stopwords: BTreeSet::new(),
            stemmer: Stemmer::None,
            ngram_orders: BTreeSet::from([1]),
            min_token_length: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ngram_orders.is_empty() {
            return Err(Error::Config("ngram_orders must not be empty".into()));
        }
        if let Some(bad) = self.ngram_orders.iter().find(|k| !(1..=3).contains(*k)) {
            return Err(Error::Config(format!("unsupported n-gram order {bad}; expected 1, 2 or 3")));
        }
        if self.min_token_length == 0 {
            return Err(Error::Config("min_token_length must be at least 1".into()));
        }
        Ok(())
    }

    /// Normalizes a single dictionary entry (possibly a multi-word phrase) into
    /// the term form produced by this pipeline, ignoring stop-word and length
    /// filters. Multi-word entries become n-gram terms.
    pub fn normalize_term(&self, entry: &str) -> Option<String> {
        let text = self.prepare(entry);
        let parts: Vec<String> = text
            .split_whitespace()
            .map(|w| self.stemmer.stem(w))
            .filter(|w| !w.is_empty())
            .collect();
        if parts.is_empty() {
            None
        } else {
            Some(parts.join(&NGRAM_SEPARATOR.to_string()))
        }
    }

    fn prepare(&self, raw: &str) -> String {
        let lowered = if self.lowercase {
            raw.to_lowercase()
        } else {
            raw.to_owned()
        };
        if self.strip_punctuation_and_digits {
            lowered
                .chars()
                .map(|c| if c.is_alphabetic() { c } else { ' ' })
                .collect()
        } else {
            lowered
        }
    }
}

/// The bundled English stop-word list.
pub fn default_stopwords() -> BTreeSet<String> {
    parse_stopwords(DEFAULT_STOPWORDS)
}

fn parse_stopwords(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Reads a stop-word file: one word per line, `#` starts a comment.
pub fn load_stopwords(path: &Path) -> Result<BTreeSet<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_stopwords(&text))
}

/// Unigram stream of `raw_text` under `config`.
///
/// ```
/// use std::collections::BTreeSet;
/// use polarlex::text_pipeline::{tokenize, PipelineConfig};
///
/// let config = PipelineConfig {
///     stopwords: BTreeSet::from(["the".to_string(), "is".to_string()]),
///     ..PipelineConfig::default()
/// };
/// assert_eq!(tokenize("The story is PERFECT!", &config), ["stori", "perfect"]);
/// ```
pub fn tokenize(raw_text: &str, config: &PipelineConfig) -> Vec<String> {
    config
        .prepare(raw_text)
        .split_whitespace()
        .filter(|w| !config.stopwords.contains(*w))
        .filter(|w| w.chars().count() >= config.min_token_length)
        .map(|w| config.stemmer.stem(w))
        .filter(|w| !w.is_empty())
        .collect()
}

/// All contiguous windows for each order, order 1 first, then order 2, and so on.
pub fn ngrams<S: AsRef<str>>(tokens: &[S], orders: &BTreeSet<usize>) -> Vec<String> {
    let mut out = Vec::new();
    let sep = NGRAM_SEPARATOR.to_string();
    for &k in orders {
        if k == 0 || tokens.len() < k {
            continue;
        }
        out.extend(tokens.windows(k).map(|w| {
            w.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(&sep)
        }));
    }
    out
}

/// A document reduced to its stemmed unigram stream.
///
/// Terms (unigrams and/or n-grams) are derived on demand from `tokens`, so the
/// half split is always taken on the unigram stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedDocument {
    pub doc_id: String,
    pub tokens: Vec<String>,
    pub half_split_index: usize,
    pub ngram_orders: BTreeSet<usize>,
}

impl TokenizedDocument {
    pub fn new(doc_id: impl Into<String>, tokens: Vec<String>, ngram_orders: BTreeSet<usize>) -> Self {
        let half_split_index = tokens.len() / 2;
        TokenizedDocument {
            doc_id: doc_id.into(),
            tokens,
            half_split_index,
            ngram_orders,
        }
    }

    pub fn from_text(doc_id: impl Into<String>, raw_text: &str, config: &PipelineConfig) -> Self {
        Self::new(doc_id, tokenize(raw_text, config), config.ngram_orders.clone())
    }

    /// Unigrams-only document, mostly useful in tests.
    pub fn unigrams<S: Into<String>>(doc_id: &str, tokens: impl IntoIterator<Item = S>) -> Self {
        Self::new(
            doc_id,
            tokens.into_iter().map(Into::into).collect(),
            BTreeSet::from([1]),
        )
    }

    /// The vocabulary terms of this document: n-grams over the whole stream.
    pub fn terms(&self) -> Vec<String> {
        ngrams(&self.tokens, &self.ngram_orders)
    }

    /// Terms of the first and second half; n-grams never straddle the split.
    pub fn half_terms(&self) -> (Vec<String>, Vec<String>) {
        let (first, second) = split_halves(self);
        (
            ngrams(first, &self.ngram_orders),
            ngrams(second, &self.ngram_orders),
        )
    }
}

/// `tokens[..n/2]` and `tokens[n/2..]`; an odd token goes to the second half.
pub fn split_halves(doc: &TokenizedDocument) -> (&[String], &[String]) {
    doc.tokens.split_at(doc.half_split_index.min(doc.tokens.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config_with_stops(stops: &[&str]) -> PipelineConfig {
        PipelineConfig {
            stopwords: stops.iter().map(|s| s.to_string()).collect(),
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn tokenize_examples() {
        let config = config_with_stops(&["the", "is"]);
        assert_eq!(tokenize("The story is PERFECT!", &config), ["stori", "perfect"]);
        assert!(tokenize("", &config).is_empty());
        assert_eq!(
            tokenize("aaa bbb aaa", &PipelineConfig::identity()),
            ["aaa", "bbb", "aaa"]
        );
    }

    #[test]
    fn digits_and_punctuation_split_tokens() {
        let config = config_with_stops(&[]);
        assert_eq!(tokenize("bad-movie 10/10", &config), ["bad", "movi"]);
    }

    #[test]
    fn stopwords_match_surface_form() {
        // "being" is a stop word, "beings" is not, even though both stem to "be".
        let config = config_with_stops(&["being"]);
        assert_eq!(tokenize("being beings", &config), ["be"]);
    }

    #[test]
    fn ngram_examples() {
        let two = BTreeSet::from([2]);
        assert_eq!(ngrams(&["bad", "movi"], &two), ["bad_movi"]);
        assert_eq!(
            ngrams(&["wast", "time", "wast"], &BTreeSet::from([1, 2])),
            ["wast", "time", "wast", "wast_time", "time_wast"]
        );
        assert!(ngrams(&["a"], &two).is_empty());
    }

    #[test]
    fn halves() {
        for (n, first, second) in [(4, 2, 2), (5, 2, 3), (0, 0, 0)] {
            let doc = TokenizedDocument::unigrams("d", (0..n).map(|i| format!("t{i}")));
            let (a, b) = split_halves(&doc);
            assert_eq!((a.len(), b.len()), (first, second));
        }
    }

    #[test]
    fn half_terms_do_not_straddle() {
        let doc = TokenizedDocument::new(
            "d",
            ["a", "b", "c", "d"].map(String::from).to_vec(),
            BTreeSet::from([2]),
        );
        let (first, second) = doc.half_terms();
        assert_eq!(first, ["a_b"]);
        assert_eq!(second, ["c_d"]);
    }

    #[test]
    fn config_validation() {
        let mut c = PipelineConfig::default();
        assert!(c.validate().is_ok());
        c.ngram_orders.clear();
        assert!(c.validate().is_err());
        c.ngram_orders.insert(4);
        assert!(c.validate().is_err());
        let c = PipelineConfig {
            min_token_length: 0,
            ..PipelineConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn default_list_loads() {
        let stops = default_stopwords();
        assert!(stops.contains("the"));
        assert!(!stops.iter().any(|s| s.starts_with('#')));
        assert!(!stops.contains("now"));
    }

    #[test]
    fn normalize_phrase() {
        let c = PipelineConfig::default();
        assert_eq!(c.normalize_term("Wasted Time").as_deref(), Some("wast_time"));
        assert_eq!(c.normalize_term("   ").as_deref(), None);
    }
}
