mod common;

use std::collections::BTreeSet;

use common::planted_fit;
use polarlex::dictionary::{build_dictionary, sidecar_path, DictionaryInputs, PolarityDictionary, ShareThreshold};
use polarlex::dtm::{build_matrix, ResponseVector};
use polarlex::lasso::{cross_validate, lambda_max, CvConfig};
use polarlex::text_pipeline::{PipelineConfig, TokenizedDocument};
use proptest::prelude::*;

#[test]
fn training_documents_rescore_to_fitted_values() {
    let f = planted_fit(3, 300, 60, 6);
    let dict = &f.model.dictionary;
    assert!(!dict.is_empty());
    let fitted = f.model.fitted_values();
    for (doc, want) in f.docs.iter().zip(&fitted) {
        let s = dict.score_document(doc);
        assert!((s.score - want).abs() < 1e-9, "{}: {} vs {want}", doc.doc_id, s.score);
        let sum: f64 = s.contributing_terms.iter().map(|(_, c)| c).sum();
        assert!((s.score - dict.metadata.intercept - sum).abs() < 1e-9);
    }
}

#[test]
fn entries_are_the_active_set() {
    let f = planted_fit(4, 300, 60, 6);
    let fit = f.model.path.selected_fit();
    let vocab = &f.model.standardized.vocabulary;
    let active: BTreeSet<&str> = fit.active_set.iter().map(|&j| vocab[j].as_str()).collect();
    let entries: BTreeSet<&str> = f.model.dictionary.terms().collect();
    assert_eq!(active, entries);
    assert_eq!(f.model.dictionary.len(), fit.active_set.len());
    for e in &f.model.dictionary.entries {
        let j = vocab.iter().position(|t| *t == e.term).unwrap();
        assert_eq!(e.coefficient, fit.coefficients[j]);
        assert!((e.share_in_positive_docs + e.share_in_negative_docs - 1.0).abs() < 1e-9);
        assert!(e.term_sd > 0.0 && e.standard_error >= 0.0);
    }
    let coefs: Vec<f64> = f.model.dictionary.entries.iter().map(|e| e.coefficient).collect();
    assert!(coefs.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn empty_document_scores_the_offset() {
    let f = planted_fit(5, 200, 40, 4);
    let dict = &f.model.dictionary;
    let empty = TokenizedDocument::unigrams("empty", Vec::<String>::new());
    let want = dict.metadata.intercept
        + dict.entries.iter().map(|e| -e.term_mean / e.term_sd * e.coefficient).sum::<f64>();
    assert!((dict.score_document(&empty).score - want).abs() < 1e-12);
    let h = dict.score_halves(&empty);
    assert_eq!(h.mu1, dict.offset());
    assert_eq!(h.mu2, dict.offset());
}

#[test]
fn one_extra_occurrence_moves_score_by_idf_coef_over_sd() {
    let f = planted_fit(6, 200, 40, 4);
    let dict = &f.model.dictionary;
    let base = &f.docs[0];
    for e in &dict.entries {
        let mut tokens = base.tokens.clone();
        tokens.push(e.term.clone());
        let more = TokenizedDocument::unigrams("more", tokens);
        let diff = dict.score_document(&more).score - dict.score_document(base).score;
        let want = e.term_idf * e.coefficient / e.term_sd;
        assert!((diff - want).abs() < 1e-10, "{}: {diff} vs {want}", e.term);
    }
}

#[test]
fn round_trip_is_byte_identical() {
    let f = planted_fit(7, 200, 40, 4);
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    f.model.dictionary.save(&a).unwrap();
    let loaded = PolarityDictionary::load(&a).unwrap();
    assert_eq!(loaded, f.model.dictionary);
    loaded.save(&b).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(
        std::fs::read(sidecar_path(&a)).unwrap(),
        std::fs::read(sidecar_path(&b)).unwrap()
    );
}

#[test]
fn corrupt_files_are_rejected() {
    let f = planted_fit(8, 200, 40, 4);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    f.model.dictionary.save(&path).unwrap();
    let csv = std::fs::read_to_string(&path).unwrap();
    let json = std::fs::read_to_string(sidecar_path(&path)).unwrap();
    let first = csv.lines().nth(1).unwrap();
    let term = first.split(',').next().unwrap();

    let dup = format!("{csv}{first}\n");
    let err = PolarityDictionary::parse(&path, &dup, &sidecar_path(&path), &json).unwrap_err();
    assert!(err.to_string().contains(term), "{err}");

    let mut lines: Vec<String> = csv.lines().map(|l| format!("{l},extra")).collect();
    lines[0] = format!("{},extra", polarlex::dictionary::CSV_HEADER);
    let wide = lines.join("\n");
    assert!(PolarityDictionary::parse(&path, &wide, &sidecar_path(&path), &json).is_err());

    let json_extra = json.replacen('{', "{\n  \"unexpected\": 1,", 1);
    assert!(PolarityDictionary::parse(&path, &csv, &sidecar_path(&path), &json_extra).is_err());
}

#[test]
fn empty_support_gives_empty_dictionary() {
    let docs: Vec<TokenizedDocument> = (0..20)
        .map(|i| TokenizedDocument::unigrams(&format!("d{i}"), ["alpha", "beta", "gamma"].iter().take(1 + i % 3).copied()))
        .collect();
    let y: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin()).collect();
    let dtm = build_matrix(&docs, 1).unwrap().apply_tfidf().unwrap();
    let std = dtm.standardize();
    let response = ResponseVector::new(y).unwrap().standardize().unwrap();
    let lmax = lambda_max(&std.x, &response.values).unwrap();
    let path = cross_validate(&std.x, &response.values, &[lmax], &CvConfig { n_folds: 4, ..CvConfig::default() }).unwrap();
    let dict = build_dictionary(&DictionaryInputs {
        path: &path,
        post: None,
        dtm: &dtm,
        standardized: &std,
        responses: &response,
        share_threshold: ShareThreshold::Median,
        pipeline: &PipelineConfig::default(),
    })
    .unwrap();
    assert!(dict.is_empty());
    assert_eq!(dict.metadata.n_positive + dict.metadata.n_negative, 0);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn raw_count_contributions_add(a in prop::collection::vec(0usize..40, 0..50), b in prop::collection::vec(0usize..40, 0..50)) {
        let f = shared();
        let dict = &f.model.dictionary;
        let vocab = &f.corpus.vocabulary;
        let ta: Vec<String> = a.iter().map(|&i| vocab[i].clone()).collect();
        let tb: Vec<String> = b.iter().map(|&i| vocab[i].clone()).collect();
        let both: Vec<String> = ta.iter().chain(&tb).cloned().collect();
        let base = dict.metadata.intercept + dict.offset();
        let lift = |t: &[String]| dict.score_terms("x", t).score - base;
        let lhs = lift(&both);
        let rhs = lift(&ta) + lift(&tb);
        prop_assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
    }
}

fn shared() -> &'static common::PlantedFit {
    static FIT: std::sync::OnceLock<common::PlantedFit> = std::sync::OnceLock::new();
    FIT.get_or_init(|| planted_fit(9, 200, 40, 4))
}
