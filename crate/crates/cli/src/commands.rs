//! The subcommands. Each returns its artifacts in memory; `main` decides
//! where text goes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use polarlex::dictionary::{PolarityDictionary, ShareThreshold};
use polarlex::evaluation::{compare, compare_with, AlphaMetric, ComparisonReport, ReferenceDictionary};
use polarlex::event_study::{abnormal_returns, filter_events, load_events, responses_csv, PriceSeries};
use polarlex::hypotheses::{joint_f_test, partition_by_reference, placement_report, Alternative, JointFResult, PlacementReport};
use polarlex::lasso::SelectionRule;
use polarlex::model::{fit_model, FittedModel};
use polarlex::text_pipeline::{PipelineConfig, TokenizedDocument};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::input::{align_responses, read_corpus, read_responses, RawDocument};
use crate::manifest::{digest_file, FileDigest, Manifest};
use crate::{DataError, NumericalError, UsageError};

pub const DICTIONARY_FILE: &str = "dictionary.csv";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TEXT: &str = "report.txt";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, Default)]
pub struct BuildOptions {
    /// Treat non-convergence as an error.
    pub strict: bool,
    /// Also write the weighted document-term matrix.
    pub dump_dtm: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub lambda: f64,
    pub cv_mean_error: f64,
    pub cv_se_error: f64,
    pub n_active: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VifSummary {
    pub threshold: f64,
    pub n_terms: usize,
    pub count_exceeding: usize,
    pub share_exceeding: f64,
    pub max: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildReport {
    pub n_documents: usize,
    pub min_doc_frequency: usize,
    pub n_candidate_terms: usize,
    pub zero_variance_terms: usize,
    pub n_terms: usize,
    pub n_positive: usize,
    pub n_negative: usize,
    pub selection_rule: SelectionRule,
    pub selected_lambda: f64,
    pub selected_index: usize,
    /// Index the one-standard-error rule would choose on the same path.
    pub one_se_index: usize,
    pub r2: Option<f64>,
    pub adjusted_r2: Option<f64>,
    pub refit_dropped_terms: Vec<String>,
    pub converged: bool,
    pub vif: Option<VifSummary>,
    pub path: Vec<PathPoint>,
}

#[derive(Debug)]
pub struct BuildOutcome {
    pub output_dir: PathBuf,
    pub model: FittedModel,
    pub report: BuildReport,
    pub manifest: Manifest,
}

fn tokenize_all(docs: &[RawDocument], pipeline: &PipelineConfig) -> Vec<TokenizedDocument> {
    docs.par_iter()
        .map(|d| TokenizedDocument::from_text(d.doc_id.clone(), &d.text, pipeline))
        .collect()
}

fn require_exists(path: &Path, what: &str) -> Result<()> {
    if !path.exists() {
        bail!(DataError(format!("{what} {} does not exist", path.display())));
    }
    Ok(())
}

/// Fits a dictionary from the corpus and responses named in `config` and
/// writes it, the model report and the run manifest into the output directory.
/// Relative paths in `config` are taken relative to `base`.
pub fn cmd_build(config: &RunConfig, base: &Path, options: BuildOptions) -> Result<BuildOutcome> {
    let run = config.resolved(base);
    require_exists(&run.corpus_path, "corpus directory")?;
    require_exists(&run.response_path, "response file")?;
    if let Some(p) = run.stopword_file() {
        require_exists(&p, "stop-word file")?;
    }
    let model_config = run.model_config()?;
    let raw = read_corpus(&run.corpus_path)?;
    let responses = align_responses(&raw, &read_responses(&run.response_path)?, &run.response_path)?;
    log::info!("{} documents", raw.len());
    let docs = tokenize_all(&raw, &model_config.pipeline);
    let model = fit_model(&docs, &responses, &model_config)?;
    let converged = model.path.all_converged();
    if !converged {
        let msg = "coordinate descent did not converge for every lambda on the path";
        if options.strict {
            bail!(NumericalError(msg.into()));
        }
        log::warn!("{msg}; raise lasso.max_iter or loosen lasso.tol");
    }
    let report = build_report(&model, converged);

    let out = &run.output_dir;
    std::fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let dict_path = out.join(DICTIONARY_FILE);
    model.dictionary.save(&dict_path)?;
    let mut written = vec![DICTIONARY_FILE.to_owned(), "dictionary.json".to_owned()];
    write(out, REPORT_JSON, &to_json(&report)?)?;
    write(out, REPORT_TEXT, &report_text(&report, &model.dictionary))?;
    written.extend([REPORT_JSON.to_owned(), REPORT_TEXT.to_owned()]);
    if options.dump_dtm {
        model.weighted.export(out, "dtm")?;
        written.extend(["dtm.triplets.csv".to_owned(), "dtm.vocab.csv".to_owned()]);
    }

    let mut inputs: Vec<FileDigest> = Vec::with_capacity(raw.len() + 2);
    let shown_corpus = config.corpus_path.display().to_string();
    for d in &raw {
        let name = d.path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        inputs.push(digest_file(&d.path, &format!("{shown_corpus}/{name}"))?);
    }
    inputs.push(digest_file(&run.response_path, &config.response_path.display().to_string())?);
    if let Some(p) = run.stopword_file() {
        inputs.push(digest_file(&p, &config.pipeline.stopwords)?);
    }
    let outputs = written
        .iter()
        .map(|name| digest_file(&out.join(name), name))
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest {
        tool: "polarlex".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: "build".into(),
        strict: options.strict,
        config: config.clone(),
        inputs,
        outputs,
    };
    write(out, MANIFEST_FILE, &manifest.to_json()?)?;
    Ok(BuildOutcome {
        output_dir: out.clone(),
        model,
        report,
        manifest,
    })
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let p = dir.join(name);
    std::fs::write(&p, contents).with_context(|| format!("cannot write {}", p.display()))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn build_report(model: &FittedModel, converged: bool) -> BuildReport {
    let path = &model.path;
    let dict = &model.dictionary;
    let vif = model.vif.as_ref().map(|v| VifSummary {
        threshold: v.threshold,
        n_terms: v.vif.len(),
        count_exceeding: v.count_exceeding_threshold,
        share_exceeding: v.share_exceeding(),
        max: v.vif.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean: v.vif.iter().sum::<f64>() / v.vif.len() as f64,
    });
    BuildReport {
        n_documents: model.standardized.n_docs(),
        min_doc_frequency: model.min_doc_frequency,
        n_candidate_terms: model.standardized.n_terms(),
        zero_variance_terms: model.standardized.dropped_terms.len(),
        n_terms: dict.len(),
        n_positive: dict.metadata.n_positive,
        n_negative: dict.metadata.n_negative,
        selection_rule: path.selection_rule,
        selected_lambda: path.selected_lambda,
        selected_index: path.selected_index,
        one_se_index: path.index_for(SelectionRule::OneSe),
        r2: model.post.as_ref().map(|p| p.r2),
        adjusted_r2: model.post.as_ref().map(|p| p.adjusted_r2),
        refit_dropped_terms: dict.metadata.refit_dropped_terms.clone(),
        converged,
        vif,
        path: path
            .lambdas
            .iter()
            .zip(&path.fits)
            .enumerate()
            .map(|(i, (&lambda, fit))| PathPoint {
                lambda,
                cv_mean_error: path.cv_mean_error[i],
                cv_se_error: path.cv_se_error[i],
                n_active: fit.active_set.len(),
            })
            .collect(),
    }
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "n/a".to_owned(), |x| format!("{x:.digits$}"))
}

/// Human-readable model summary followed by the term table.
pub fn report_text(report: &BuildReport, dict: &PolarityDictionary) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "documents            {}", report.n_documents);
    let _ = writeln!(s, "min document freq.   {}", report.min_doc_frequency);
    let _ = writeln!(s, "candidate terms      {}", report.n_candidate_terms);
    let _ = writeln!(
        s,
        "selected terms       {} ({} positive, {} negative)",
        report.n_terms, report.n_positive, report.n_negative
    );
    let _ = writeln!(s, "lambda               {:.6e} (index {}, rule {:?})", report.selected_lambda, report.selected_index, report.selection_rule);
    let _ = writeln!(s, "adjusted R^2         {}", fmt_opt(report.adjusted_r2, 4));
    if let Some(v) = &report.vif {
        let _ = writeln!(
            s,
            "VIF > {}             {} of {} terms ({:.2}%), max {:.2}",
            v.threshold,
            v.count_exceeding,
            v.n_terms,
            100.0 * v.share_exceeding,
            v.max
        );
    }
    if !report.converged {
        let _ = writeln!(s, "warning: not every fit on the path converged");
    }
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:<24} {:>10} {:>10} {:>8} {:>9} {:>8} {:>8}",
        "term", "coef", "std.err", "t", "rel.freq%", "pos.doc%", "neg.doc%"
    );
    for e in &dict.entries {
        let _ = writeln!(
            s,
            "{:<24} {:>10.4} {:>10.4} {:>8.2} {:>9.2} {:>8.2} {:>8.2}",
            e.term,
            e.coefficient,
            e.standard_error,
            e.t_statistic,
            100.0 * e.relative_doc_frequency,
            100.0 * e.share_in_positive_docs,
            100.0 * e.share_in_negative_docs
        );
    }
    s
}

fn load_dictionary(path: &Path) -> Result<PolarityDictionary> {
    PolarityDictionary::load(path).with_context(|| format!("loading dictionary {}", path.display()))
}

fn check_pipeline(dict: &PolarityDictionary, expected: Option<&PipelineConfig>) -> Result<()> {
    if let Some(p) = expected {
        if *p != dict.metadata.pipeline {
            let what = if p.stemmer != dict.metadata.pipeline.stemmer {
                format!(
                    "stemmer {:?} differs from the dictionary's {:?}",
                    p.stemmer, dict.metadata.pipeline.stemmer
                )
            } else {
                "text pipeline settings differ from the ones the dictionary was built with".to_owned()
            };
            bail!(DataError(what));
        }
    }
    Ok(())
}

/// Scores every document of `corpus_dir`. Columns: `doc_id,score,predicted`
/// and, with `halves`, `mu1,mu2,mu`.
pub fn cmd_score(dictionary: &Path, corpus_dir: &Path, halves: bool, expected: Option<&PipelineConfig>) -> Result<String> {
    let dict = load_dictionary(dictionary)?;
    check_pipeline(&dict, expected)?;
    let raw = read_corpus(corpus_dir)?;
    let docs = tokenize_all(&raw, &dict.metadata.pipeline);
    let rows: Vec<String> = docs
        .par_iter()
        .map(|d| {
            let score = dict.score_document(d).score;
            let predicted = dict.metadata.response_mean + dict.metadata.response_sd * score;
            if halves {
                let h = dict.score_halves(d);
                format!("{},{score},{predicted},{},{},{}\n", d.doc_id, h.mu1, h.mu2, h.mu)
            } else {
                format!("{},{score},{predicted}\n", d.doc_id)
            }
        })
        .collect();
    let mut out = String::from(if halves { "doc_id,score,predicted,mu1,mu2,mu\n" } else { "doc_id,score,predicted\n" });
    for r in rows {
        out.push_str(&r);
    }
    Ok(out)
}

/// One comparison per reference file, in argument order.
pub fn cmd_compare(dictionary: &Path, references: &[PathBuf], metric: Option<AlphaMetric>) -> Result<Vec<ComparisonReport>> {
    if references.is_empty() {
        bail!(UsageError("at least one reference dictionary is required".into()));
    }
    let dict = load_dictionary(dictionary)?;
    let pipeline = &dict.metadata.pipeline;
    references
        .par_iter()
        .map(|p| {
            let reference = ReferenceDictionary::load(p, pipeline)?;
            let report = match metric {
                Some(m) => compare_with(&dict, &reference, m)?,
                None => compare(&dict, &reference)?,
            };
            Ok(report)
        })
        .collect()
}

/// Aligned table in the layout of a dictionary-comparison table.
pub fn comparison_table(reports: &[ComparisonReport]) -> String {
    let mut s = format!(
        "{:<20} {:>8} {:>8} {:>9} {:>10} {:>12} {:>8} {:>8}\n",
        "reference", "entries", "overlap", "overlap%", "consensus%", "correlation", "p", "alpha"
    );
    for r in reports {
        let _ = writeln!(
            s,
            "{:<20} {:>8} {:>8} {:>9.2} {:>10} {:>12} {:>8} {:>8}",
            r.reference,
            r.reference_size,
            r.overlap_count,
            100.0 * r.overlap_share,
            r.consensus_share.map_or_else(|| "n/a".to_owned(), |c| format!("{:.2}", 100.0 * c)),
            fmt_opt(r.pearson_correlation, 4),
            fmt_opt(r.correlation_p_value, 4),
            fmt_opt(r.krippendorff_alpha, 4)
        );
    }
    s
}

fn tokenized_with_responses(
    dict: &PolarityDictionary,
    corpus_dir: &Path,
    responses: Option<&Path>,
) -> Result<(Vec<TokenizedDocument>, Option<Vec<f64>>)> {
    let raw = read_corpus(corpus_dir)?;
    let y = match responses {
        Some(p) => Some(align_responses(&raw, &read_responses(p)?, p)?),
        None => None,
    };
    Ok((tokenize_all(&raw, &dict.metadata.pipeline), y))
}

/// Half-document scores and the placement tests, split by response when
/// `responses` is given.
pub fn cmd_placement(
    dictionary: &Path,
    corpus_dir: &Path,
    responses: Option<&Path>,
    threshold: ShareThreshold,
    alternative: Alternative,
) -> Result<PlacementReport> {
    let dict = load_dictionary(dictionary)?;
    let (docs, y) = tokenized_with_responses(&dict, corpus_dir, responses)?;
    let halves: Vec<_> = docs.par_iter().map(|d| dict.score_halves(d)).collect();
    Ok(placement_report(&halves, y.as_deref(), threshold, alternative)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointFOutcome {
    pub reference: String,
    pub informative: Vec<String>,
    pub non_informative: Vec<String>,
    pub informative_share: f64,
    pub non_informative_share: f64,
    /// Names of the tested terms that survived the rank check.
    pub tested_terms: Vec<String>,
    pub test: JointFResult,
}

/// F-test of the dictionary terms the reference does not label.
pub fn cmd_joint_f(dictionary: &Path, corpus_dir: &Path, responses: &Path, reference: &Path) -> Result<JointFOutcome> {
    let dict = load_dictionary(dictionary)?;
    if dict.is_empty() {
        bail!(DataError(format!("dictionary {} has no terms", dictionary.display())));
    }
    let reference = ReferenceDictionary::load(reference, &dict.metadata.pipeline)?;
    let partition = partition_by_reference(&dict, &reference);
    if partition.non_informative.is_empty() {
        bail!(UsageError(format!(
            "reference {} labels every dictionary term; there is nothing to test",
            reference.name
        )));
    }
    let (docs, y) = tokenized_with_responses(&dict, corpus_dir, Some(responses))?;
    let y = y.expect("responses requested");
    let x = dict.feature_matrix(&docs);
    let full: Vec<usize> = (0..dict.len()).collect();
    let tested: Vec<usize> = dict
        .entries
        .iter()
        .enumerate()
        .filter(|(_, e)| !reference.entries.contains_key(&e.term))
        .map(|(j, _)| j)
        .collect();
    let test = joint_f_test(&x, &y, &full, &tested)?;
    Ok(JointFOutcome {
        reference: reference.name.clone(),
        informative_share: partition.informative_share(),
        non_informative_share: partition.non_informative_share(),
        tested_terms: test.tested_terms.iter().map(|&j| dict.entries[j].term.clone()).collect(),
        informative: partition.informative,
        non_informative: partition.non_informative,
        test,
    })
}

#[derive(Debug, Clone)]
pub struct EventStudyOptions {
    pub window: usize,
    pub min_words: usize,
    pub min_price: f64,
    /// Drop events whose abnormal return cannot be computed instead of failing.
    pub skip_failed: bool,
}

impl Default for EventStudyOptions {
    fn default() -> Self {
        EventStudyOptions {
            window: polarlex::event_study::DEFAULT_ESTIMATION_WINDOW,
            min_words: polarlex::event_study::DEFAULT_MIN_WORDS,
            min_price: polarlex::event_study::DEFAULT_MIN_PRICE,
            skip_failed: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventStudyOutcome {
    /// `doc_id,abnormal_return`, usable as a response file.
    pub csv: String,
    pub n_events: usize,
    pub n_kept: usize,
    pub skipped: Vec<(String, String)>,
}

/// Abnormal returns for the events in `events_csv`, reading each
/// instrument's prices from `<prices_dir>/<instrument_id>.csv`.
pub fn cmd_event_study(prices_dir: &Path, market_csv: &Path, events_csv: &Path, options: &EventStudyOptions) -> Result<EventStudyOutcome> {
    let market = PriceSeries::load_csv(market_csv, "market")?;
    let events = load_events(events_csv)?;
    let kept = filter_events(&events, options.min_words, options.min_price);
    if kept.is_empty() {
        log::warn!("all {} events were removed by the word-count and price filters", events.len());
    }
    let mut prices = BTreeMap::new();
    let mut missing = Vec::new();
    for e in &kept {
        if prices.contains_key(&e.instrument_id) {
            continue;
        }
        let p = prices_dir.join(format!("{}.csv", e.instrument_id));
        if p.is_file() {
            prices.insert(e.instrument_id.clone(), PriceSeries::load_csv(&p, e.instrument_id.clone())?);
        } else {
            missing.push(e.instrument_id.clone());
        }
    }
    if !missing.is_empty() && !options.skip_failed {
        bail!(DataError(format!(
            "no price file in {} for instrument(s): {}",
            prices_dir.display(),
            missing.join(", ")
        )));
    }
    let results = abnormal_returns(&kept, &prices, &market, options.window);
    let mut rows = Vec::with_capacity(results.len());
    let mut skipped = Vec::new();
    for (doc_id, r) in results {
        match r {
            Ok(v) => rows.push((doc_id, v)),
            Err(e) if options.skip_failed => {
                log::warn!("{doc_id}: {e}");
                skipped.push((doc_id, e.to_string()));
            }
            Err(e) => return Err(anyhow::Error::from(e).context(format!("event {doc_id}"))),
        }
    }
    Ok(EventStudyOutcome {
        csv: responses_csv(&rows),
        n_events: events.len(),
        n_kept: rows.len(),
        skipped,
    })
}
