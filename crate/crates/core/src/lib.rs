//! Build statistical polarity dictionaries from labelled text.
//!
//! Documents are tokenized and stemmed, turned into a tf-idf weighted
//! document-term matrix, and regressed on a numeric response with a
//! cross-validated LASSO. The selected terms are refit by OLS so every entry
//! carries a standard error. The resulting dictionary scores new documents,
//! can be compared with reference word lists, and supports tests about where
//! sentiment sits within a document.

pub mod dictionary;
pub mod distributions;
pub mod dtm;
pub mod error;
pub mod evaluation;
pub mod event_study;
pub mod hypotheses;
pub mod inference;
pub mod lasso;
pub mod linalg;
pub mod model;
pub mod synthetic;
pub mod text_pipeline;

pub use error::{Error, Result};
