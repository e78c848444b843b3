use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use polarlex::dictionary::ShareThreshold;
use polarlex::evaluation::AlphaMetric;
use polarlex::hypotheses::Alternative;
use polarlex_cli::commands::{self, BuildOptions, EventStudyOptions};
use polarlex_cli::config::RunConfig;
use polarlex_cli::{exit_code, UsageError};

/// Statistically generated polarity dictionaries.
///
/// The number of worker threads can be set with POLARLEX_THREADS.
#[derive(Parser)]
#[command(name = "polarlex", version)]
struct Cli {
    /// More log output (-v info, -vv debug). RUST_LOG takes precedence.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a dictionary from a corpus and its responses.
    Build {
        /// TOML run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Fail (exit 4) when a fit on the path does not converge.
        #[arg(long)]
        strict: bool,
        /// Also write the weighted document-term matrix.
        #[arg(long)]
        dump_dtm: bool,
    },
    /// Print a run configuration with every default filled in.
    InitConfig {
        #[arg(long, default_value = "corpus")]
        corpus: PathBuf,
        #[arg(long, default_value = "responses.csv")]
        responses: PathBuf,
        #[arg(long, default_value = "out")]
        output_dir: PathBuf,
    },
    /// Score documents with a dictionary.
    Score {
        #[arg(long)]
        dictionary: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        /// Add first-half, second-half and whole-document contribution sums.
        #[arg(long)]
        halves: bool,
        /// Run configuration whose pipeline must match the dictionary's.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write here instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compare a dictionary with reference word lists.
    Compare {
        #[arg(long)]
        dictionary: PathBuf,
        /// Reference files with `term,value` lines.
        #[arg(required = true)]
        references: Vec<PathBuf>,
        /// Agreement metric; by default nominal for binary lists, interval otherwise.
        #[arg(long, value_enum, default_value_t = MetricArg::Auto)]
        metric: MetricArg,
        /// Also write the reports as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Hypothesis tests on a corpus scored with a dictionary.
    Hypothesis {
        #[command(subcommand)]
        test: HypothesisCommand,
    },
    /// Market-model abnormal returns for disclosure events.
    EventStudy {
        /// Directory of `<instrument_id>.csv` price files.
        #[arg(long)]
        prices_dir: PathBuf,
        /// Market index prices.
        #[arg(long)]
        market: PathBuf,
        /// Events CSV: doc_id,instrument_id,event_date,word_count,price.
        #[arg(long)]
        events: PathBuf,
        /// Estimation window in trading days.
        #[arg(long, default_value_t = polarlex::event_study::DEFAULT_ESTIMATION_WINDOW)]
        window: usize,
        #[arg(long, default_value_t = polarlex::event_study::DEFAULT_MIN_WORDS)]
        min_words: usize,
        #[arg(long, default_value_t = polarlex::event_study::DEFAULT_MIN_PRICE)]
        min_price: f64,
        /// Leave out events without enough price data instead of failing.
        #[arg(long)]
        skip_failed: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum HypothesisCommand {
    /// Compare sentiment of first and second document halves.
    Placement {
        #[arg(long)]
        dictionary: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        /// Responses for the positive/negative panels.
        #[arg(long)]
        responses: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ThresholdArg::Median)]
        threshold: ThresholdArg,
        #[arg(long, value_enum, default_value_t = AlternativeArg::TwoSided)]
        alternative: AlternativeArg,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Joint F-test of the dictionary terms a reference list does not label.
    JointF {
        #[arg(long)]
        dictionary: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        responses: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Auto,
    Nominal,
    Interval,
}

#[derive(Clone, Copy, ValueEnum)]
enum ThresholdArg {
    Median,
    Zero,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlternativeArg {
    TwoSided,
    Less,
    Greater,
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("POLARLEX_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| UsageError(format!("POLARLEX_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("cannot configure the thread pool")
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Build {
            config,
            output_dir,
            strict,
            dump_dtm,
        } => {
            let mut run = RunConfig::load(&config)?;
            if let Some(dir) = output_dir {
                run.output_dir = std::env::current_dir()?.join(dir);
            }
            let base = config.parent().unwrap_or(Path::new("."));
            let outcome = commands::cmd_build(&run, base, BuildOptions { strict, dump_dtm })?;
            print!("{}", commands::report_text(&outcome.report, &outcome.model.dictionary));
            eprintln!("wrote {}", outcome.output_dir.display());
        }
        Command::InitConfig {
            corpus,
            responses,
            output_dir,
        } => print!("{}", RunConfig::new(corpus, responses, output_dir).to_toml()?),
        Command::Score {
            dictionary,
            corpus,
            halves,
            config,
            output,
        } => {
            let expected = match config {
                Some(p) => {
                    let run = RunConfig::load(&p)?.resolved(p.parent().unwrap_or(Path::new(".")));
                    Some(run.pipeline_config()?)
                }
                None => None,
            };
            let csv = commands::cmd_score(&dictionary, &corpus, halves, expected.as_ref())?;
            emit(&csv, output.as_deref())?;
        }
        Command::Compare {
            dictionary,
            references,
            metric,
            json,
        } => {
            let metric = match metric {
                MetricArg::Auto => None,
                MetricArg::Nominal => Some(AlphaMetric::Nominal),
                MetricArg::Interval => Some(AlphaMetric::Interval),
            };
            let reports = commands::cmd_compare(&dictionary, &references, metric)?;
            if let Some(p) = json {
                emit(&commands::to_json(&reports)?, Some(&p))?;
            }
            print!("{}", commands::comparison_table(&reports));
        }
        Command::Hypothesis { test } => match test {
            HypothesisCommand::Placement {
                dictionary,
                corpus,
                responses,
                threshold,
                alternative,
                json,
            } => {
                let threshold = match threshold {
                    ThresholdArg::Median => ShareThreshold::Median,
                    ThresholdArg::Zero => ShareThreshold::Zero,
                };
                let alternative = match alternative {
                    AlternativeArg::TwoSided => Alternative::TwoSided,
                    AlternativeArg::Less => Alternative::Less,
                    AlternativeArg::Greater => Alternative::Greater,
                };
                let report = commands::cmd_placement(&dictionary, &corpus, responses.as_deref(), threshold, alternative)?;
                if let Some(p) = json {
                    emit(&commands::to_json(&report)?, Some(&p))?;
                }
                print!("{}", report.to_table());
            }
            HypothesisCommand::JointF {
                dictionary,
                corpus,
                responses,
                reference,
                json,
            } => {
                let outcome = commands::cmd_joint_f(&dictionary, &corpus, &responses, &reference)?;
                if let Some(p) = json {
                    emit(&commands::to_json(&outcome)?, Some(&p))?;
                }
                let t = &outcome.test;
                println!(
                    "informative {} ({:.2}%), non-informative {} ({:.2}%)",
                    outcome.informative.len(),
                    100.0 * outcome.informative_share,
                    outcome.non_informative.len(),
                    100.0 * outcome.non_informative_share
                );
                match (t.f_statistic, t.p_value) {
                    (Some(f), Some(p)) => println!("F({}, {}) = {f:.4}, p = {p:.4e}", t.df_numerator, t.df_denominator),
                    _ => println!("F undefined: the full model fits exactly"),
                }
            }
        },
        Command::EventStudy {
            prices_dir,
            market,
            events,
            window,
            min_words,
            min_price,
            skip_failed,
            output,
        } => {
            let options = EventStudyOptions {
                window,
                min_words,
                min_price,
                skip_failed,
            };
            let outcome = commands::cmd_event_study(&prices_dir, &market, &events, &options)?;
            emit(&outcome.csv, output.as_deref())?;
            eprintln!(
                "{} of {} events written, {} skipped",
                outcome.n_kept,
                outcome.n_events,
                outcome.skipped.len()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
