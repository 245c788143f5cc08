use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use xorqa::analysis::{Containment, GoldPolicy, SelectionMode, Setting, DEFAULT_EPSILON};
use xorqa::embedding::EmbeddingMatrix;
use xorqa::index::FlatIndex;
use xorqa::metrics::{score_answers, ScoreLine, Tokenizer};
use xorqa::model::{LanguageCode, LanguageSet, Question};
use xorqa::pairing::{
    check_pairs_with_translations, cosine_bleu_correlation, ingest_translation_pairs, mine_pairs,
    PairingSide, Translation, DEFAULT_THRESHOLD,
};
use xorqa::records::{read_records, write_lines_to, write_records, Corpus, QuestionSet};
use xorqa::report::{analyze, run_pipeline, AnalysisInputs, AnalysisOptions, PipelineConfig};
use xorqa::{Error, Result};

#[derive(Parser)]
#[command(name = "xorqa", version, about = "Cross-lingual QA consistency toolkit")]
struct Cli {
    /// Accepted language codes, comma separated. Defaults to the thirteen
    /// corpus languages.
    #[arg(long, global = true, value_delimiter = ',')]
    languages: Option<Vec<String>>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build or query the flat inner-product index.
    #[command(subcommand)]
    Index(IndexCmd),
    /// Form question groups.
    #[command(subcommand)]
    Pair(PairCmd),
    /// Score generated answers.
    #[command(subcommand)]
    Eval(EvalCmd),
    /// Select contexts and build the consistency matrix.
    Analyze(AnalyzeArgs),
    /// Run the whole pipeline from a config file.
    Report(ReportArgs),
}

#[derive(Subcommand)]
enum IndexCmd {
    Build {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    Search {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
}

#[derive(Subcommand)]
enum PairCmd {
    /// Pair questions across two languages by embedding cosine similarity.
    Mine {
        #[arg(long)]
        src: LanguageCode,
        #[arg(long)]
        dst: LanguageCode,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long)]
        questions: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate a translation pair file and write it back in canonical form.
    Ingest {
        #[arg(long)]
        file: PathBuf,
        /// Defaults to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Correlate mined cosine similarity with BLEU of machine translations.
    Validate {
        #[arg(long)]
        groups: PathBuf,
        #[arg(long)]
        questions: PathBuf,
        #[arg(long)]
        translations: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum EvalCmd {
    Score {
        #[arg(long)]
        answers: PathBuf,
        #[arg(long)]
        questions: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Oracle,
    NonOracle,
}

impl From<ModeArg> for Setting {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Oracle => Setting::Oracle,
            ModeArg::NonOracle => Setting::NonOracle,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ContainmentArg {
    PerLanguage,
    AnyLanguage,
}

impl From<ContainmentArg> for Containment {
    fn from(c: ContainmentArg) -> Self {
        match c {
            ContainmentArg::PerLanguage => Containment::PerLanguage,
            ContainmentArg::AnyLanguage => Containment::AnyLanguage,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum GoldPolicyArg {
    AsProvided,
    BorrowFromGroup,
}

impl From<GoldPolicyArg> for GoldPolicy {
    fn from(g: GoldPolicyArg) -> Self {
        match g {
            GoldPolicyArg::AsProvided => GoldPolicy::AsProvided,
            GoldPolicyArg::BorrowFromGroup => GoldPolicy::BorrowFromGroup,
        }
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(value_enum)]
    mode: ModeArg,
    #[arg(long)]
    passages: PathBuf,
    #[arg(long)]
    groups: PathBuf,
    #[arg(long)]
    retrievals: PathBuf,
    #[arg(long)]
    answers: Option<PathBuf>,
    /// Question file whose `gold_answers` are used.
    #[arg(long)]
    golds: PathBuf,
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Ranking depth searched for in-language contexts.
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long, value_enum, default_value = "per-language")]
    containment: ContainmentArg,
    #[arg(long, value_enum, default_value = "as-provided")]
    gold_policy: GoldPolicyArg,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Serialize)]
struct ErrorLine<'a> {
    error: &'a str,
    message: String,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let detail = e.to_string();
            let message = detail
                .lines()
                .take_while(|l| !l.starts_with("Usage:"))
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .collect::<Vec<_>>()
                .join(" ");
            return fail("usage", message.trim_start_matches("error: ").to_string());
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), e.to_string()),
    }
}

fn fail(kind: &str, message: String) -> ExitCode {
    let line = serde_json::to_string(&ErrorLine {
        error: kind,
        message,
    })
    .expect("error line serializes");
    eprintln!("{line}");
    ExitCode::FAILURE
}

fn warn(message: &str) {
    eprintln!("warning: {message}");
}

fn run(cli: Cli) -> Result<()> {
    let langs = match &cli.languages {
        Some(codes) => LanguageSet::new(codes.iter().cloned())?,
        None => LanguageSet::default(),
    };
    match cli.command {
        Command::Index(IndexCmd::Build { embeddings, out }) => {
            let index = FlatIndex::build(EmbeddingMatrix::read(embeddings)?)?;
            index.save(out)
        }
        Command::Index(IndexCmd::Search {
            index,
            queries,
            k,
            out,
            workers,
        }) => {
            let index = FlatIndex::load(index)?;
            let queries = EmbeddingMatrix::read(queries)?;
            let results = match workers {
                Some(n) => index.batch_search_with_workers(&queries, k, n)?,
                None => index.batch_search(&queries, k)?,
            };
            write_records(out, &results)
        }
        Command::Pair(PairCmd::Mine {
            src,
            dst,
            threshold,
            questions,
            embeddings,
            out,
        }) => {
            langs.check(&src)?;
            langs.check(&dst)?;
            let questions = QuestionSet::load_with(questions, &langs)?;
            let embeddings = EmbeddingMatrix::read(embeddings)?;
            let side = |lang: &LanguageCode| -> Vec<Question> {
                questions.in_language(lang).cloned().collect()
            };
            let (s, d) = (side(&src), side(&dst));
            let groups = mine_pairs(
                PairingSide::new(&s, &embeddings),
                PairingSide::new(&d, &embeddings),
                threshold,
            )?;
            write_records(out, &groups)
        }
        Command::Pair(PairCmd::Ingest { file, out }) => {
            let groups = ingest_translation_pairs(file)?;
            emit(out.as_deref(), &groups)
        }
        Command::Pair(PairCmd::Validate {
            groups,
            questions,
            translations,
            out,
        }) => {
            let groups = read_records(groups)?;
            let questions = QuestionSet::load_with(questions, &langs)?;
            let translations: Vec<Translation> = read_records(translations)?;
            let checks = check_pairs_with_translations(&groups, &questions, &translations)?;
            if let Some(out) = out {
                write_records(out, &checks)?;
            }
            let r = cosine_bleu_correlation(&checks)?;
            println!("{}", serde_json::json!({ "pairs": checks.len(), "pearson_r": r }));
            Ok(())
        }
        Command::Eval(EvalCmd::Score {
            answers,
            questions,
            out,
        }) => {
            let questions = QuestionSet::load_with(questions, &langs)?;
            let answers = read_records(answers)?;
            let (scores, summary) = score_answers(&Tokenizer::default(), &answers, &questions)?;
            let mut lines: Vec<ScoreLine> = scores.into_iter().map(ScoreLine::Record).collect();
            lines.push(ScoreLine::Aggregate(summary));
            write_records(out, &lines)
        }
        Command::Analyze(a) => {
            let setting = Setting::from(a.mode);
            let corpus = Corpus::load_with(&a.passages, &langs)?;
            let questions = QuestionSet::load_with(&a.golds, &langs)?;
            let groups = read_records(&a.groups)?;
            let retrievals = read_records(&a.retrievals)?;
            let answers = a.answers.as_ref().map(read_records).transpose()?;
            let labels = a.labels.as_ref().map(read_records).transpose()?;
            let options = AnalysisOptions {
                mode: SelectionMode {
                    setting,
                    top_k: a.top_k.unwrap_or(setting.default_top_k()),
                },
                containment: a.containment.into(),
                gold_policy: a.gold_policy.into(),
                epsilon: a.epsilon,
            };
            let mut bundle = analyze(
                AnalysisInputs {
                    corpus: &corpus,
                    questions: &questions,
                    groups: &groups,
                    retrievals: &retrievals,
                    answers: answers.as_deref(),
                    labels: labels.as_deref(),
                },
                options,
            )?;
            bundle.retrievals.clear();
            bundle.warnings.iter().for_each(|w| warn(w));
            bundle.write(&a.out)
        }
        Command::Report(r) => {
            let mut config = PipelineConfig::load(&r.config)?;
            if let Some(m) = r.mode {
                config.mode = m.into();
            }
            config.k = r.k.or(config.k);
            config.threshold = r.threshold.unwrap_or(config.threshold);
            config.workers = r.workers.or(config.workers);
            if let Some(dir) = r.out_dir {
                config.out_dir = dir;
            }
            if let Some(codes) = cli.languages {
                config.languages = Some(codes);
            }
            let bundle = run_pipeline(&config)?;
            bundle.warnings.iter().for_each(|w| warn(w));
            bundle.write(&config.out_dir)?;
            print!("{}", bundle.summary());
            Ok(())
        }
    }
}

fn emit<T: Serialize>(out: Option<&Path>, records: &[T]) -> Result<()> {
    match out {
        Some(path) => write_records(path, records),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_lines_to(&mut lock, records)
                .and_then(|()| lock.flush())
                .map_err(|source| Error::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}
