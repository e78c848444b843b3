use std::collections::BTreeSet;

use polarlex::text_pipeline::{ngrams, porter_stem, tokenize, PipelineConfig, TokenizedDocument};
use proptest::prelude::*;

#[test]
fn porter_matches_reference_stems() {
    let data = include_str!("data/porter_original.txt");
    let mut checked = 0;
    let mut mismatches = Vec::new();
    for line in data.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
        let (word, stem) = line.split_once(' ').expect("word stem");
        if porter_stem(word) != stem {
            mismatches.push(format!("{word}: got {}, want {stem}", porter_stem(word)));
        }
        checked += 1;
    }
    assert!(checked > 1900);
    assert!(mismatches.is_empty(), "{mismatches:#?}");
}

proptest! {
    #[test]
    fn stemming_reaches_fixpoint(word in "[a-z]{1,15}") {
        let mut w = porter_stem(&word);
        for _ in 0..3 {
            w = porter_stem(&w);
        }
        prop_assert_eq!(porter_stem(&w), w.clone());
        prop_assert!(w.len() <= word.len());
    }

    #[test]
    fn stop_words_never_survive(text in "[a-zA-Z ,.;!?0-9]{0,200}") {
        let config = PipelineConfig { stemmer: polarlex::text_pipeline::Stemmer::None, ..PipelineConfig::default() };
        for t in tokenize(&text, &config) {
            prop_assert!(!config.stopwords.contains(&t));
            prop_assert!(t.chars().all(|c| c.is_lowercase()));
            prop_assert!(t.chars().count() >= config.min_token_length);
        }
    }

    #[test]
    fn ngram_counts(tokens in prop::collection::vec("[a-c]{1,3}", 0..30)) {
        let orders = BTreeSet::from([1, 2, 3]);
        let grams = ngrams(&tokens, &orders);
        let n = tokens.len();
        let expected: usize = (1..=3).map(|k| (n + 1).saturating_sub(k)).sum();
        prop_assert_eq!(grams.len(), expected);
        let doc = TokenizedDocument::new("d", tokens.clone(), orders);
        let (a, b) = doc.half_terms();
        prop_assert!(a.len() + b.len() <= grams.len());
    }

    #[test]
    fn tokenize_is_deterministic(text in ".{0,300}") {
        let config = PipelineConfig::default();
        prop_assert_eq!(tokenize(&text, &config), tokenize(&text, &config));
    }
}

#[test]
fn repeated_stemming_counterexample() {
    assert_eq!(porter_stem("agreed"), "agre");
    assert_eq!(porter_stem("agre"), "agr");
}

#[test]
fn identity_pipeline_splits_on_whitespace() {
    let config = PipelineConfig::identity();
    assert_eq!(tokenize("The  Film,  was great", &config), ["The", "Film,", "was", "great"]);
}

#[test]
fn multiword_entries_normalize_to_ngrams() {
    let config = PipelineConfig::default();
    assert_eq!(config.normalize_term("Waste of Time").as_deref(), Some("wast_of_time"));
    assert_eq!(config.normalize_term("  123 "), None);
}
