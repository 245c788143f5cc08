//! End-to-end pipeline and report files.
//!
//! A run reads every input named by a [`PipelineConfig`], retrieves with the
//! flat index, selects in-language contexts, scores externally generated
//! answers and writes a bundle of plain files. Nothing in the bundle depends
//! on wall-clock time or hash iteration order, so identical inputs give
//! byte-identical output.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{
    build_consistency_matrix, error_distribution, inconsistency_rate, index_retrievals,
    select_contexts, ConsistencyMatrix, Containment, Divergence, ErrorHistogram, GoldPolicy,
    InconsistencyStats, MatrixRow, SelectedGroup, SelectionMode, Setting, DEFAULT_EPSILON,
};
use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::index::FlatIndex;
use crate::model::{
    AnswerRecord, ErrorLabel, LanguageCode, LanguageSet, QuestionGroup, RetrievalResult,
};
use crate::pairing::DEFAULT_THRESHOLD;
use crate::records::{
    check_answer_references, check_group_references, read_records, write_records, Corpus,
    QuestionSet,
};

pub const RETRIEVALS_FILE: &str = "retrievals.jsonl";
pub const CONTEXTS_FILE: &str = "contexts.jsonl";
pub const MATRIX_FILE: &str = "matrix.jsonl";
pub const HEATMAP_FILE: &str = "heatmap.csv";
pub const RATES_FILE: &str = "rates.json";
pub const ERRORS_FILE: &str = "errors.json";
pub const SUMMARY_FILE: &str = "summary.txt";

/// CSV with one row per group and one column per language. Cells hold the
/// F1 score; languages without an answer are left empty.
pub fn emit_heatmap_data(matrix: &ConsistencyMatrix) -> String {
    let langs = matrix.languages();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["group_id".to_string()];
    header.extend(langs.iter().map(ToString::to_string));
    w.write_record(&header).expect("in-memory write");
    for row in matrix.rows() {
        let mut record = vec![row.group_id.clone()];
        record.extend(
            langs
                .iter()
                .map(|l| row.cells.get(l).map(|c| c.f1.to_string()).unwrap_or_default()),
        );
        w.write_record(&record).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv of UTF-8 fields")
}

/// Parsed heatmap table.
#[derive(Clone, Debug, PartialEq)]
pub struct Heatmap {
    pub languages: Vec<LanguageCode>,
    pub rows: Vec<(String, Vec<Option<f64>>)>,
}

pub fn parse_heatmap(text: &str) -> Result<Heatmap> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| Error::Csv(e.to_string()))?.clone();
    if header.get(0) != Some("group_id") {
        return Err(Error::Csv("first column must be `group_id`".into()));
    }
    let languages = header
        .iter()
        .skip(1)
        .map(LanguageCode::new)
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record.map_err(|e| Error::Csv(e.to_string()))?;
        let cells = record
            .iter()
            .skip(1)
            .map(|f| {
                if f.is_empty() {
                    Ok(None)
                } else {
                    f.parse::<f64>()
                        .map(Some)
                        .map_err(|e| Error::Csv(format!("bad F1 `{f}`: {e}")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push((record[0].to_string(), cells));
    }
    Ok(Heatmap { languages, rows })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub setting: Setting,
    pub groups_in: usize,
    pub groups_selected: usize,
    pub epsilon: f64,
    /// Rows whose cell F1 scores differ by more than `epsilon`.
    pub by_score: InconsistencyStats,
    /// Rows whose normalized answers differ.
    pub by_answer: InconsistencyStats,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalysisOptions {
    pub mode: SelectionMode,
    pub containment: Containment,
    pub gold_policy: GoldPolicy,
    pub epsilon: f64,
}

impl AnalysisOptions {
    pub fn new(mode: SelectionMode) -> Self {
        Self {
            mode,
            containment: Containment::default(),
            gold_policy: GoldPolicy::default(),
            epsilon: DEFAULT_EPSILON,
        }
    }
}

/// Everything the analysis stage consumes.
#[derive(Clone, Copy, Debug)]
pub struct AnalysisInputs<'a> {
    pub corpus: &'a Corpus,
    pub questions: &'a QuestionSet,
    pub groups: &'a [QuestionGroup],
    pub retrievals: &'a [RetrievalResult],
    pub answers: Option<&'a [AnswerRecord]>,
    pub labels: Option<&'a [ErrorLabel]>,
}

/// Outputs of one run. Absent parts were not computable from the inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportBundle {
    pub retrievals: Vec<RetrievalResult>,
    pub selected: Vec<SelectedGroup>,
    pub matrix: Option<ConsistencyMatrix>,
    pub rates: Option<RateReport>,
    pub errors: Option<ErrorHistogram>,
    pub warnings: Vec<String>,
}

/// Context selection, scoring and aggregation over already retrieved
/// results.
pub fn analyze(inputs: AnalysisInputs<'_>, options: AnalysisOptions) -> Result<ReportBundle> {
    let mut warnings = Vec::new();
    check_group_references(inputs.questions, inputs.groups)?;
    let golds = inputs.questions.golds();
    let by_qid = index_retrievals(inputs.retrievals.iter().cloned());
    let selected = select_contexts(
        options.mode,
        inputs.groups,
        &by_qid,
        inputs.corpus,
        &golds,
        options.containment,
    )?;

    let mut matrix = None;
    let mut rates = None;
    if let Some(answers) = inputs.answers {
        check_answer_references(answers, inputs.questions, inputs.corpus)?;
        let retained: Vec<QuestionGroup> = selected.iter().map(|s| s.group.clone()).collect();
        // Answers of members the filter removed are expected; only answers
        // outside every input group reach the matrix builder's warnings.
        let kept: HashSet<&str> = retained
            .iter()
            .flat_map(|g| g.members().iter().map(|m| m.qid.as_str()))
            .collect();
        let grouped: HashSet<&str> = inputs
            .groups
            .iter()
            .flat_map(|g| g.members().iter().map(|m| m.qid.as_str()))
            .collect();
        let answers: Vec<AnswerRecord> = answers
            .iter()
            .filter(|a| kept.contains(a.qid.as_str()) || !grouped.contains(a.qid.as_str()))
            .cloned()
            .collect();
        let build = build_consistency_matrix(&retained, &answers, &golds, options.gold_policy)?;
        warnings.extend(build.warnings);
        if build.matrix.is_empty() {
            warnings.push("no groups selected; inconsistency rates not computed".into());
        } else {
            rates = Some(RateReport {
                setting: options.mode.setting,
                groups_in: inputs.groups.len(),
                groups_selected: selected.len(),
                epsilon: options.epsilon,
                by_score: inconsistency_rate(
                    &build.matrix,
                    Divergence::Scores {
                        epsilon: options.epsilon,
                    },
                )?,
                by_answer: inconsistency_rate(&build.matrix, Divergence::Answers)?,
            });
        }
        matrix = Some(build.matrix);
    }

    Ok(ReportBundle {
        retrievals: inputs.retrievals.to_vec(),
        selected,
        matrix,
        rates,
        errors: inputs.labels.map(error_distribution),
        warnings,
    })
}

impl ReportBundle {
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let mut line = |text: String| {
            s.push_str(&text);
            s.push('\n');
        };
        line(format!("retrievals: {}", self.retrievals.len()));
        line(format!("groups selected: {}", self.selected.len()));
        let contexts: usize = self.selected.iter().map(|g| g.contexts.len()).sum();
        line(format!("in-language contexts: {contexts}"));
        if let Some(m) = &self.matrix {
            let langs: Vec<String> = m.languages().iter().map(ToString::to_string).collect();
            line(format!("matrix rows: {} languages: [{}]", m.len(), langs.join(", ")));
        }
        if let Some(r) = &self.rates {
            line(format!(
                "inconsistent by F1 (epsilon {}): {}/{} = {:.4}",
                r.epsilon, r.by_score.inconsistent, r.by_score.total, r.by_score.rate
            ));
            line(format!(
                "inconsistent by answer text: {}/{} = {:.4}",
                r.by_answer.inconsistent, r.by_answer.total, r.by_answer.rate
            ));
        }
        if let Some(h) = &self.errors {
            line(format!("error labels: {}", h.total));
            for (t, n) in &h.counts {
                line(format!("  {t}: {n}"));
            }
        }
        for w in &self.warnings {
            line(format!("warning: {w}"));
        }
        s
    }

    /// Writes every available artifact into `dir`, creating it if needed.
    /// Retrievals are skipped when the bundle holds none.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        if !self.retrievals.is_empty() {
            write_records(dir.join(RETRIEVALS_FILE), &self.retrievals)?;
        }
        write_records(dir.join(CONTEXTS_FILE), &self.selected)?;
        if let Some(m) = &self.matrix {
            write_records(dir.join(MATRIX_FILE), m.rows())?;
            write_text(&dir.join(HEATMAP_FILE), &emit_heatmap_data(m))?;
        }
        if let Some(r) = &self.rates {
            write_json(&dir.join(RATES_FILE), r)?;
        }
        if let Some(h) = &self.errors {
            write_json(&dir.join(ERRORS_FILE), h)?;
        }
        write_text(&dir.join(SUMMARY_FILE), &self.summary())
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
    text.push('\n');
    write_text(path, &text)
}

/// Reads a matrix written as [`MATRIX_FILE`].
pub fn load_matrix(path: impl AsRef<Path>) -> Result<ConsistencyMatrix> {
    ConsistencyMatrix::from_rows(read_records::<MatrixRow>(path)?)
}

/// Declarative description of a pipeline run. Relative paths are resolved
/// against the directory holding the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub passages: PathBuf,
    pub passage_embeddings: PathBuf,
    pub questions: PathBuf,
    pub question_embeddings: PathBuf,
    pub groups: PathBuf,
    #[serde(default)]
    pub answers: Option<PathBuf>,
    #[serde(default)]
    pub labels: Option<PathBuf>,
    pub mode: Setting,
    /// Retrieval depth; defaults to 20 (oracle) or 1,000 (non-oracle).
    #[serde(default)]
    pub k: Option<usize>,
    /// Similarity members of `groups` must have a cosine above this.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub containment: Containment,
    #[serde(default)]
    pub gold_policy: GoldPolicy,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub workers: Option<usize>,
    /// Accepted language codes; defaults to the thirteen corpus languages.
    #[serde(default)]
    pub languages: Option<Vec<String>>,
    pub out_dir: PathBuf,
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

impl PipelineConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: Self =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        Ok(config)
    }

    /// Makes every relative path relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.passages);
        fix(&mut self.passage_embeddings);
        fix(&mut self.questions);
        fix(&mut self.question_embeddings);
        fix(&mut self.groups);
        fix(&mut self.out_dir);
        if let Some(p) = self.answers.as_mut() {
            fix(p);
        }
        if let Some(p) = self.labels.as_mut() {
            fix(p);
        }
    }

    pub fn retrieval_k(&self) -> usize {
        self.k.unwrap_or_else(|| self.mode.default_top_k())
    }

    fn inputs(&self) -> Vec<&Path> {
        let mut v = vec![
            self.passages.as_path(),
            self.passage_embeddings.as_path(),
            self.questions.as_path(),
            self.question_embeddings.as_path(),
            self.groups.as_path(),
        ];
        v.extend(self.answers.as_deref());
        v.extend(self.labels.as_deref());
        v
    }
}

/// Retrieval plus [`analyze`], driven by a config. Does not write files;
/// see [`ReportBundle::write`].
pub fn run_pipeline(config: &PipelineConfig) -> Result<ReportBundle> {
    for p in config.inputs() {
        if !p.is_file() {
            return Err(Error::io(
                p,
                std::io::Error::new(std::io::ErrorKind::NotFound, "missing input file"),
            ));
        }
    }
    let k = config.retrieval_k();
    if k == 0 {
        return Err(Error::InvalidK);
    }
    let mut warnings = Vec::new();
    let protocol_k = config.mode.default_top_k();
    if k < protocol_k {
        warnings.push(format!(
            "k = {k} is below the {protocol_k} hits the {} protocol inspects",
            match config.mode {
                Setting::Oracle => "oracle",
                Setting::NonOracle => "non-oracle",
            }
        ));
    }
    let langs = match &config.languages {
        Some(codes) => LanguageSet::new(codes.iter().cloned())?,
        None => LanguageSet::default(),
    };

    let corpus = Corpus::load_with(&config.passages, &langs)?;
    let questions = QuestionSet::load_with(&config.questions, &langs)?;
    let passage_vectors = EmbeddingMatrix::read(&config.passage_embeddings)?;
    let question_vectors = EmbeddingMatrix::read(&config.question_embeddings)?;
    if passage_vectors.dim() != question_vectors.dim() {
        return Err(Error::DimMismatch {
            expected: passage_vectors.dim(),
            found: question_vectors.dim(),
        });
    }
    for pid in passage_vectors.ids() {
        corpus.resolve(pid)?;
    }
    for qid in question_vectors.ids() {
        questions.resolve(qid)?;
    }
    let groups: Vec<QuestionGroup> = read_records(&config.groups)?;
    for g in &groups {
        g.check_threshold(config.threshold)?;
    }
    let answers: Option<Vec<AnswerRecord>> = config.answers.as_ref().map(read_records).transpose()?;
    let labels: Option<Vec<ErrorLabel>> = config.labels.as_ref().map(read_records).transpose()?;

    let index = FlatIndex::build(passage_vectors)?;
    let retrievals = match config.workers {
        Some(n) => index.batch_search_with_workers(&question_vectors, k, n)?,
        None => index.batch_search(&question_vectors, k)?,
    };

    let options = AnalysisOptions {
        mode: SelectionMode {
            setting: config.mode,
            top_k: protocol_k,
        },
        containment: config.containment,
        gold_policy: config.gold_policy,
        epsilon: config.epsilon,
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
    warnings.append(&mut bundle.warnings);
    bundle.warnings = warnings;
    Ok(bundle)
}
