//! Oracle and non-oracle consistency analysis over question groups.
//!
//! Both settings pick, for every group member, the best-scoring retrieved
//! passage written in the member's own language. The oracle setting looks
//! at the top 20 hits and keeps a group only when at least two languages
//! have a context containing their gold answer. The non-oracle setting
//! looks at the top 1,000 hits and applies no gold filter.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::Tokenizer;
use crate::model::{AnswerRecord, ErrorLabel, ErrorType, LanguageCode, QuestionGroup, RetrievalResult};
use crate::records::Corpus;

pub const ORACLE_TOP_K: usize = 20;
pub const NON_ORACLE_TOP_K: usize = 1000;
pub const DEFAULT_EPSILON: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Setting {
    Oracle,
    NonOracle,
}

impl Setting {
    pub fn default_top_k(self) -> usize {
        match self {
            Setting::Oracle => ORACLE_TOP_K,
            Setting::NonOracle => NON_ORACLE_TOP_K,
        }
    }
}

/// How far down the ranking in-language contexts are looked for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SelectionMode {
    pub setting: Setting,
    pub top_k: usize,
}

impl SelectionMode {
    pub fn oracle() -> Self {
        Self {
            setting: Setting::Oracle,
            top_k: ORACLE_TOP_K,
        }
    }

    pub fn non_oracle() -> Self {
        Self {
            setting: Setting::NonOracle,
            top_k: NON_ORACLE_TOP_K,
        }
    }
}

/// Which gold answers a language's context must contain in the oracle filter.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Containment {
    /// The member's own gold answers.
    #[default]
    PerLanguage,
    /// Any gold answer of any member of the group.
    AnyLanguage,
}

/// The passage chosen as in-language context for one question.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContextChoice {
    pub qid: String,
    pub lang: LanguageCode,
    pub pid: String,
    pub score: f64,
    pub rank: u32,
}

/// A group together with its chosen contexts, sorted by language.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectedGroup {
    pub group: QuestionGroup,
    pub contexts: Vec<ContextChoice>,
}

pub type Retrievals = HashMap<String, RetrievalResult>;

/// Keys retrieval results by question id.
pub fn index_retrievals(results: impl IntoIterator<Item = RetrievalResult>) -> Retrievals {
    results.into_iter().map(|r| (r.qid.clone(), r)).collect()
}

pub type Golds = HashMap<String, Vec<String>>;

/// For each member, the highest-ranked hit within `top_k` whose passage is
/// in the member's language. Members without one get no entry.
pub fn select_in_language_context(
    group: &QuestionGroup,
    retrievals: &Retrievals,
    corpus: &Corpus,
    top_k: usize,
) -> Result<BTreeMap<LanguageCode, ContextChoice>> {
    let mut out = BTreeMap::new();
    for m in group.members() {
        let result = retrievals
            .get(&m.qid)
            .ok_or_else(|| Error::MissingRetrieval(m.qid.clone()))?;
        let mut chosen = None;
        for hit in result.top(top_k) {
            let passage = corpus.resolve(&hit.pid)?;
            if chosen.is_none() && passage.lang == m.lang {
                chosen = Some(ContextChoice {
                    qid: m.qid.clone(),
                    lang: m.lang.clone(),
                    pid: hit.pid.clone(),
                    score: hit.score,
                    rank: hit.rank,
                });
            }
        }
        if let Some(c) = chosen {
            out.insert(m.lang.clone(), c);
        }
    }
    Ok(out)
}

fn normalized_join(tokenizer: &Tokenizer, text: &str, lang: &LanguageCode) -> String {
    tokenizer.tokenize(text, lang).join(" ")
}

/// Whether any gold, normalized and space-joined, occurs as a substring of
/// the normalized context. Golds that normalize to nothing never match.
pub fn context_contains_gold<S: AsRef<str>>(
    tokenizer: &Tokenizer,
    context: &str,
    golds: &[S],
    lang: &LanguageCode,
) -> bool {
    let haystack = normalized_join(tokenizer, context, lang);
    golds.iter().any(|g| {
        let needle = normalized_join(tokenizer, g.as_ref(), lang);
        !needle.is_empty() && haystack.contains(&needle)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleOptions {
    pub top_k: usize,
    pub containment: Containment,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            top_k: ORACLE_TOP_K,
            containment: Containment::PerLanguage,
        }
    }
}

/// Keeps groups whose in-language contexts contain the gold answer in at
/// least two languages. Languages whose context lacks the gold are dropped
/// from the retained group.
pub fn oracle_filter(
    groups: &[QuestionGroup],
    retrievals: &Retrievals,
    corpus: &Corpus,
    golds: &Golds,
    options: OracleOptions,
) -> Result<Vec<SelectedGroup>> {
    let tokenizer = Tokenizer::default();
    let kept: Vec<Option<SelectedGroup>> = groups
        .par_iter()
        .map(|g| oracle_keep(g, retrievals, corpus, golds, options, &tokenizer))
        .collect::<Result<_>>()?;
    Ok(kept.into_iter().flatten().collect())
}

fn oracle_keep(
    group: &QuestionGroup,
    retrievals: &Retrievals,
    corpus: &Corpus,
    golds: &Golds,
    options: OracleOptions,
    tokenizer: &Tokenizer,
) -> Result<Option<SelectedGroup>> {
    let contexts = select_in_language_context(group, retrievals, corpus, options.top_k)?;
    let group_golds: Vec<&str> = group
        .members()
        .iter()
        .flat_map(|m| golds.get(&m.qid).into_iter().flatten())
        .map(String::as_str)
        .collect();
    let mut passing = BTreeMap::new();
    for (lang, choice) in contexts {
        let text = &corpus.resolve(&choice.pid)?.text;
        let contained = match options.containment {
            Containment::PerLanguage => {
                let own = golds.get(&choice.qid).map(Vec::as_slice).unwrap_or(&[]);
                context_contains_gold(tokenizer, text, own, &lang)
            }
            Containment::AnyLanguage => context_contains_gold(tokenizer, text, &group_golds, &lang),
        };
        if contained {
            passing.insert(lang, choice);
        }
    }
    if passing.len() < 2 {
        return Ok(None);
    }
    let langs: BTreeSet<LanguageCode> = passing.keys().cloned().collect();
    let restricted = group
        .restrict_to(&langs)
        .expect("two or more languages remain");
    Ok(Some(SelectedGroup {
        group: restricted,
        contexts: passing.into_values().collect(),
    }))
}

/// Every group with its top in-language context per language, no gold
/// filtering.
pub fn non_oracle_select(
    groups: &[QuestionGroup],
    retrievals: &Retrievals,
    corpus: &Corpus,
    top_k: usize,
) -> Result<Vec<SelectedGroup>> {
    groups
        .par_iter()
        .map(|g| {
            Ok(SelectedGroup {
                group: g.clone(),
                contexts: select_in_language_context(g, retrievals, corpus, top_k)?
                    .into_values()
                    .collect(),
            })
        })
        .collect()
}

/// Runs the selection for `mode`: the oracle filter or the unfiltered
/// non-oracle selection.
pub fn select_contexts(
    mode: SelectionMode,
    groups: &[QuestionGroup],
    retrievals: &Retrievals,
    corpus: &Corpus,
    golds: &Golds,
    containment: Containment,
) -> Result<Vec<SelectedGroup>> {
    match mode.setting {
        Setting::Oracle => oracle_filter(
            groups,
            retrievals,
            corpus,
            golds,
            OracleOptions {
                top_k: mode.top_k,
                containment,
            },
        ),
        Setting::NonOracle => non_oracle_select(groups, retrievals, corpus, mode.top_k),
    }
}

/// Scoring of one language's answer within a group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub qid: String,
    pub answer: String,
    pub f1: f64,
    pub em: bool,
    pub context_pid: Option<String>,
    /// No gold answer was available; `f1` and `em` are 0.
    pub no_gold: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixRow {
    pub group_id: String,
    pub cells: BTreeMap<LanguageCode, Cell>,
}

/// Answers and scores per group (rows) and language (columns).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConsistencyMatrix {
    rows: Vec<MatrixRow>,
}

impl ConsistencyMatrix {
    pub fn from_rows(rows: Vec<MatrixRow>) -> Result<Self> {
        for row in &rows {
            if let Some((lang, _)) = row
                .cells
                .iter()
                .find(|(_, c)| !(0.0..=1.0).contains(&c.f1))
            {
                return Err(Error::InvalidGroup {
                    group_id: row.group_id.clone(),
                    reason: format!("F1 outside [0, 1] in `{lang}`"),
                });
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[MatrixRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Sorted union of languages that have at least one cell.
    pub fn languages(&self) -> Vec<LanguageCode> {
        self.rows
            .iter()
            .flat_map(|r| r.cells.keys().cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }
}

/// Where a member's gold answers come from when building the matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GoldPolicy {
    /// Score against the member's own gold answers only.
    #[default]
    AsProvided,
    /// A member without gold answers borrows every other member's golds.
    BorrowFromGroup,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixBuild {
    pub matrix: ConsistencyMatrix,
    pub warnings: Vec<String>,
}

/// One row per group; each answered member fills its language's cell.
///
/// Answers for questions outside every group, or tagged with a language
/// other than their member's, are skipped with a warning.
pub fn build_consistency_matrix(
    groups: &[QuestionGroup],
    answers: &[AnswerRecord],
    golds: &Golds,
    policy: GoldPolicy,
) -> Result<MatrixBuild> {
    let tokenizer = Tokenizer::default();
    let mut owner: HashMap<&str, (usize, &LanguageCode)> = HashMap::new();
    for (gi, g) in groups.iter().enumerate() {
        for m in g.members() {
            owner.insert(m.qid.as_str(), (gi, &m.lang));
        }
    }
    let mut warnings = Vec::new();
    let mut by_group: Vec<Vec<&AnswerRecord>> = vec![Vec::new(); groups.len()];
    let mut seen = std::collections::HashSet::new();
    for a in answers {
        let Some(&(gi, lang)) = owner.get(a.qid.as_str()) else {
            warnings.push(format!("answer for `{}` is outside every group; skipped", a.qid));
            continue;
        };
        if &a.lang != lang {
            warnings.push(format!(
                "answer for `{}` is tagged `{}` but the question is `{}`; skipped",
                a.qid, a.lang, lang
            ));
            continue;
        }
        if !seen.insert(a.qid.as_str()) {
            return Err(Error::DuplicateAnswer(a.qid.clone()));
        }
        by_group[gi].push(a);
    }

    let rows = groups
        .iter()
        .zip(by_group)
        .map(|(g, group_answers)| {
            let mut cells = BTreeMap::new();
            for a in group_answers {
                let own = golds.get(&a.qid).cloned().unwrap_or_default();
                let refs = if own.is_empty() && policy == GoldPolicy::BorrowFromGroup {
                    g.members()
                        .iter()
                        .filter(|m| m.qid != a.qid)
                        .flat_map(|m| golds.get(&m.qid).cloned().unwrap_or_default())
                        .collect()
                } else {
                    own
                };
                cells.insert(
                    a.lang.clone(),
                    Cell {
                        qid: a.qid.clone(),
                        answer: a.answer.clone(),
                        f1: tokenizer.token_f1(&a.answer, &refs, &a.lang),
                        em: tokenizer.exact_match(&a.answer, &refs, &a.lang),
                        context_pid: a.context_pid.clone(),
                        no_gold: refs.is_empty(),
                    },
                );
            }
            MatrixRow {
                group_id: g.group_id.clone(),
                cells,
            }
        })
        .collect();
    Ok(MatrixBuild {
        matrix: ConsistencyMatrix::from_rows(rows)?,
        warnings,
    })
}

/// When two answers in a row count as different.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Divergence {
    /// Normalized answer token lists differ.
    Answers,
    /// Highest and lowest cell F1 differ by more than `epsilon`.
    Scores { epsilon: f64 },
}

impl Default for Divergence {
    fn default() -> Self {
        Divergence::Scores {
            epsilon: DEFAULT_EPSILON,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InconsistencyStats {
    pub inconsistent: usize,
    pub total: usize,
    pub rate: f64,
}

pub fn row_is_inconsistent(tokenizer: &Tokenizer, row: &MatrixRow, divergence: Divergence) -> bool {
    if row.cells.len() < 2 {
        return false;
    }
    match divergence {
        Divergence::Answers => {
            let mut token_lists = row
                .cells
                .iter()
                .map(|(lang, c)| tokenizer.tokenize(&c.answer, lang));
            let first = token_lists.next().expect("at least two cells");
            token_lists.any(|t| t != first)
        }
        Divergence::Scores { epsilon } => {
            let (lo, hi) = row
                .cells
                .values()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
                    (lo.min(c.f1), hi.max(c.f1))
                });
            hi - lo > epsilon
        }
    }
}

/// Fraction of rows whose answers diverge across languages.
pub fn inconsistency_rate(matrix: &ConsistencyMatrix, divergence: Divergence) -> Result<InconsistencyStats> {
    if matrix.is_empty() {
        return Err(Error::EmptyInput("inconsistency rate of an empty matrix"));
    }
    let tokenizer = Tokenizer::default();
    let inconsistent = matrix
        .rows()
        .iter()
        .filter(|r| row_is_inconsistent(&tokenizer, r, divergence))
        .count();
    let total = matrix.len();
    Ok(InconsistencyStats {
        inconsistent,
        total,
        rate: inconsistent as f64 / total as f64,
    })
}

/// Label counts per error type, in taxonomy order, with a per-language
/// breakdown for labels that name a language.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorHistogram {
    pub total: usize,
    pub counts: BTreeMap<ErrorType, usize>,
    pub by_language: BTreeMap<LanguageCode, BTreeMap<ErrorType, usize>>,
}

fn zero_counts() -> BTreeMap<ErrorType, usize> {
    ErrorType::ALL.iter().map(|&t| (t, 0)).collect()
}

pub fn error_distribution(labels: &[ErrorLabel]) -> ErrorHistogram {
    let mut counts = zero_counts();
    let mut by_language: BTreeMap<LanguageCode, BTreeMap<ErrorType, usize>> = BTreeMap::new();
    for l in labels {
        *counts.get_mut(&l.error_type).expect("closed taxonomy") += 1;
        if let Some(lang) = &l.lang {
            *by_language
                .entry(lang.clone())
                .or_insert_with(zero_counts)
                .get_mut(&l.error_type)
                .expect("closed taxonomy") += 1;
        }
    }
    ErrorHistogram {
        total: labels.len(),
        counts,
        by_language,
    }
}
