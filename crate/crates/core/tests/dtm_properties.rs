use polarlex::dtm::build_matrix;
use polarlex::text_pipeline::TokenizedDocument;
use proptest::prelude::*;

fn docs(tokens: &[Vec<&str>]) -> Vec<TokenizedDocument> {
    tokens
        .iter()
        .enumerate()
        .map(|(i, t)| TokenizedDocument::unigrams(&format!("d{i}"), t.iter().copied()))
        .collect()
}

#[test]
fn three_document_tfidf() {
    let d = docs(&[vec!["x", "z"], vec!["x", "x", "x", "z"], vec!["y", "z"]]);
    let w = build_matrix(&d, 1).unwrap().apply_tfidf().unwrap();
    // "z" is in every document and drops out.
    assert_eq!(w.vocabulary(), ["x", "y"]);
    let x = w.term_index("x").unwrap();
    assert_eq!(w.get(0, x), 1.5f64.ln());
    assert_eq!(w.get(1, x), 3.0 * 1.5f64.ln());
    assert_eq!(w.get(2, x), 0.0);
}

fn corpus() -> impl Strategy<Value = Vec<Vec<String>>> {
    prop::collection::vec(prop::collection::vec("[a-f]", 0..12), 2..15)
}

proptest! {
    #[test]
    fn columns_standardize(c in corpus()) {
        let d: Vec<TokenizedDocument> = c.iter().enumerate().map(|(i, t)| TokenizedDocument::unigrams(&format!("d{i}"), t.clone())).collect();
        let Ok(raw) = build_matrix(&d, 1) else { return Ok(()); };
        for (j, s) in raw.column_stats().iter().enumerate() {
            let df = (0..raw.n_docs()).filter(|&i| raw.get(i, j) > 0.0).count();
            prop_assert!(s.document_frequency >= 1);
            prop_assert_eq!(s.document_frequency, df);
        }
        for i in 0..raw.n_docs() {
            prop_assert!(raw.row(i).iter().all(|&(_, v)| v != 0.0));
        }
        let Ok(w) = raw.apply_tfidf() else { return Ok(()); };
        for i in 0..w.n_docs() {
            prop_assert!(w.row(i).iter().all(|&(_, v)| v != 0.0));
        }
        let std = w.standardize();
        let n = std.n_docs() as f64;
        for j in 0..std.n_terms() {
            let col = std.x.column(j);
            let m = col.iter().sum::<f64>() / n;
            let sd = (col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)).sqrt();
            prop_assert!(m.abs() < 1e-10);
            prop_assert!((sd - 1.0).abs() < 1e-8);
        }
        let again = build_matrix(&d, 1).unwrap().apply_tfidf().unwrap();
        prop_assert_eq!(w.triplets_csv(), again.triplets_csv());
        prop_assert_eq!(w.vocabulary_csv(), again.vocabulary_csv());
    }
}
