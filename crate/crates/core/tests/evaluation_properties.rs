mod common;

use std::collections::BTreeMap;

use common::planted_fit;
use polarlex::evaluation::{
    compare, compare_with, krippendorff_alpha, pearson, predictive_benchmark, AlphaMetric, BenchmarkConfig,
    ReferenceDictionary,
};
use polarlex::model::{fit_model, ModelConfig};
use polarlex::synthetic::{planted_corpus, PlantedConfig};
use polarlex::text_pipeline::PipelineConfig;
use polarlex_oracles::{interval, krippendorff_alpha as alpha_oracle, nominal};
use proptest::prelude::*;

#[test]
fn four_item_nominal_fixture() {
    let pairs = [(1.0, 1.0), (1.0, -1.0), (-1.0, -1.0), (-1.0, 1.0)];
    // n = 8, two disagreeing units: D_o = 4/8, D_e = 32/56, alpha = 1/8.
    assert_eq!(alpha_oracle(&pairs, nominal), Some(0.125));
    let got = krippendorff_alpha(&pairs, AlphaMetric::Nominal).unwrap();
    assert!((got - 0.125).abs() < 1e-15);
}

fn sign_pairs() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((prop::bool::ANY, prop::bool::ANY), 2..60).prop_map(|v| {
        v.into_iter()
            .map(|(a, b)| (if a { 1.0 } else { -1.0 }, if b { 1.0 } else { -1.0 }))
            .collect()
    })
}

proptest! {
    #[test]
    fn nominal_alpha_matches_oracle(pairs in sign_pairs()) {
        let got = krippendorff_alpha(&pairs, AlphaMetric::Nominal);
        let want = alpha_oracle(&pairs, nominal);
        match (got, want) {
            (Some(g), Some(w)) => prop_assert!((g - w).abs() < 1e-12, "{g} vs {w}"),
            (g, w) => prop_assert_eq!(g, w),
        }
        if let Some(g) = got {
            prop_assert!(g <= 1.0);
        }
    }

    #[test]
    fn interval_alpha_matches_oracle(pairs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2..40)) {
        let got = krippendorff_alpha(&pairs, AlphaMetric::Interval).unwrap();
        let want = alpha_oracle(&pairs, interval).unwrap();
        prop_assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }

    #[test]
    fn alpha_invariant_to_relabeling(pairs in sign_pairs()) {
        let flipped: Vec<(f64, f64)> = pairs.iter().map(|&(a, b)| (-a, -b)).collect();
        prop_assert_eq!(
            krippendorff_alpha(&pairs, AlphaMetric::Nominal),
            krippendorff_alpha(&flipped, AlphaMetric::Nominal)
        );
    }

    #[test]
    fn identical_raters_agree_perfectly(values in prop::collection::vec(-1.0f64..1.0, 2..30)) {
        let pairs: Vec<(f64, f64)> = values.iter().map(|&v| (v, v)).collect();
        prop_assert_eq!(krippendorff_alpha(&pairs, AlphaMetric::Interval), Some(1.0));
        prop_assert_eq!(krippendorff_alpha(&pairs, AlphaMetric::Nominal), Some(1.0));
    }

    #[test]
    fn pearson_invariant_to_positive_affine_maps(
        a in prop::collection::vec(-5.0f64..5.0, 3..30),
        scale in 0.01f64..100.0,
        shift in -10.0f64..10.0,
    ) {
        let b: Vec<f64> = a.iter().enumerate().map(|(i, v)| v.sin() + i as f64 * 0.1).collect();
        let a2: Vec<f64> = a.iter().map(|v| scale * v + shift).collect();
        match (pearson(&a, &b), pearson(&a2, &b)) {
            (Some(r1), Some(r2)) => prop_assert!((r1 - r2).abs() < 1e-9),
            (None, None) => {}
            other => prop_assert!(false, "{other:?}"),
        }
    }
}

#[test]
fn one_disagreement_among_many() {
    let mut pairs = vec![(1.0, 1.0); 10];
    pairs.extend([(-1.0, -1.0); 10]);
    pairs.push((1.0, -1.0));
    let a = krippendorff_alpha(&pairs, AlphaMetric::Nominal).unwrap();
    assert!(a > 0.0 && a < 1.0);
}

fn signs_of(dict: &polarlex::dictionary::PolarityDictionary, flip: f64) -> ReferenceDictionary {
    let pairs: Vec<(String, f64)> = dict.entries.iter().map(|e| (e.term.clone(), flip * e.coefficient.signum())).collect();
    ReferenceDictionary::from_pairs("signs", pairs, &PipelineConfig::default()).unwrap()
}

#[test]
fn self_comparison_is_perfect() {
    let f = planted_fit(11, 300, 60, 6);
    let dict = &f.model.dictionary;
    let r = compare(dict, &signs_of(dict, 1.0)).unwrap();
    assert_eq!(r.overlap_count, dict.len());
    assert_eq!(r.overlap_share, 1.0);
    assert_eq!(r.consensus_share, Some(1.0));
    assert_eq!(r.krippendorff_alpha, Some(1.0));
}

#[test]
fn flipped_signs_disagree_completely() {
    let f = planted_fit(12, 300, 60, 6);
    let mut dict = f.model.dictionary.clone();
    // Two-point coefficient pattern so the correlation is exactly -1.
    for e in &mut dict.entries {
        e.coefficient = 0.5 * e.coefficient.signum();
    }
    assert!(dict.entries.iter().any(|e| e.coefficient > 0.0) && dict.entries.iter().any(|e| e.coefficient < 0.0));
    let r = compare(&dict, &signs_of(&dict, -1.0)).unwrap();
    assert_eq!(r.consensus_count, 0);
    assert!((r.pearson_correlation.unwrap() + 1.0).abs() < 1e-12);
    assert!(r.krippendorff_alpha.unwrap() <= 0.0);
}

#[test]
fn overlap_is_symmetric_and_bounded() {
    let a = planted_fit(13, 300, 60, 6).model.dictionary;
    let b = planted_fit(14, 300, 60, 6).model.dictionary;
    let ab = compare(&a, &ReferenceDictionary::from_generated("b", &b)).unwrap();
    let ba = compare(&b, &ReferenceDictionary::from_generated("a", &a)).unwrap();
    assert_eq!(ab.overlap_count, ba.overlap_count);
    for r in [&ab, &ba] {
        assert!(r.consensus_count <= r.overlap_count);
        assert!(r.overlap_count <= r.generated_size.min(r.reference_size));
        assert!((0.0..=1.0).contains(&r.overlap_share));
        if let Some(c) = r.consensus_share {
            assert!((0.0..=1.0).contains(&c));
        }
    }
    let nominal = compare_with(&a, &ReferenceDictionary::from_generated("b", &b), AlphaMetric::Nominal).unwrap();
    assert_eq!(nominal.overlap_count, ab.overlap_count);
}

#[test]
fn reference_duplicates_collapse_by_majority() {
    let pipeline = PipelineConfig::default();
    let r = ReferenceDictionary::from_pairs(
        "dup",
        [("good", 1.0), ("goods", 1.0), ("good", -1.0), ("bad", 1.0), ("bad", -1.0)],
        &pipeline,
    )
    .unwrap();
    let want: BTreeMap<String, f64> = [("good".to_string(), 1.0)].into_iter().collect();
    assert_eq!(r.entries, want);
    assert_eq!(r.tied_terms_dropped, 1);
    assert!(r.entries.values().all(|&v| v != 0.0));
}

#[test]
fn reference_file_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("ref.txt");
    std::fs::write(&p, "# comment\nterm,value\ngood,1\nbad,oops\n").unwrap();
    let err = ReferenceDictionary::load(&p, &PipelineConfig::default()).unwrap_err().to_string();
    assert!(err.contains("ref.txt") && err.contains('4'), "{err}");
    std::fs::write(&p, "# nothing\n").unwrap();
    assert!(ReferenceDictionary::load(&p, &PipelineConfig::default()).is_err());
}

fn benchmark_corpus() -> polarlex::synthetic::PlantedCorpus {
    planted_corpus(&PlantedConfig {
        n_docs: 800,
        vocabulary_size: 120,
        n_planted: 10,
        min_doc_length: 40,
        max_doc_length: 80,
        seed: 21,
        ..PlantedConfig::default()
    })
    .unwrap()
}

#[test]
fn lasso_beats_half_planted_reference() {
    let corpus = benchmark_corpus();
    let config = BenchmarkConfig::default();
    let docs = corpus.tokenized(&config.model.pipeline);
    let half: Vec<(String, f64)> = corpus.planted.iter().step_by(2).map(|(t, c)| (t.clone(), c.signum())).collect();
    let reference = ReferenceDictionary::from_pairs("half", half, &config.model.pipeline).unwrap();
    let report = predictive_benchmark(&docs, &corpus.responses, &[reference], &config).unwrap();
    assert_eq!(report.n_test, 160);
    eprintln!("{report:?}");
    assert!(report.lasso_mse() < report.methods[1].mse);
}

#[test]
fn generated_reference_tracks_lasso_mse() {
    let corpus = benchmark_corpus();
    let config = BenchmarkConfig::default();
    let docs = corpus.tokenized(&config.model.pipeline);
    let (train, _) = polarlex::evaluation::train_test_split(docs.len(), config.test_fraction, config.split_seed).unwrap();
    let train_docs: Vec<_> = train.iter().map(|&i| docs[i].clone()).collect();
    let train_y: Vec<f64> = train.iter().map(|&i| corpus.responses[i]).collect();
    let dict = fit_model(&train_docs, &train_y, &ModelConfig::default()).unwrap().dictionary;
    let reference = ReferenceDictionary::from_generated("self", &dict);
    let report = predictive_benchmark(&docs, &corpus.responses, &[reference], &config).unwrap();
    let ratio = report.methods[1].mse / report.lasso_mse();
    eprintln!("self-reference MSE ratio {ratio}");
    assert!((ratio - 1.0).abs() < 0.05, "ratio {ratio}");
}
