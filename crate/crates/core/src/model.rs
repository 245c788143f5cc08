//! Domain records shared by every stage of the analysis.
//!
//! All record types serialize to one JSON object per line with the field
//! names used here. Types carrying invariants validate them on
//! deserialization, so a record that loads is a record that holds.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lowercase ASCII language tag such as `en`, `fi` or `ko`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LanguageCode(String);

impl LanguageCode {
    pub fn new(code: impl Into<String>) -> Result<Self> {
        let code = code.into();
        let valid = (2..=3).contains(&code.len()) && code.bytes().all(|b| b.is_ascii_lowercase());
        if valid {
            Ok(Self(code))
        } else {
            Err(Error::InvalidLanguage(code))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for LanguageCode {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        Self::new(value)
    }
}

impl From<LanguageCode> for String {
    fn from(value: LanguageCode) -> Self {
        value.0
    }
}

impl FromStr for LanguageCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::new(s)
    }
}

impl fmt::Display for LanguageCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Languages accepted at ingestion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LanguageSet(BTreeSet<LanguageCode>);

/// The thirteen Wikipedia languages of the retrieval corpus.
pub const CORPUS_LANGUAGES: [&str; 13] = [
    "en", "ar", "fi", "ja", "ko", "ru", "bn", "te", "id", "th", "he", "sv", "es",
];

impl LanguageSet {
    pub fn new<I, S>(codes: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        codes
            .into_iter()
            .map(LanguageCode::new)
            .collect::<Result<BTreeSet<_>>>()
            .map(Self)
    }

    pub fn contains(&self, lang: &LanguageCode) -> bool {
        self.0.contains(lang)
    }

    pub fn check(&self, lang: &LanguageCode) -> Result<()> {
        if self.contains(lang) {
            Ok(())
        } else {
            Err(Error::UnsupportedLanguage(lang.to_string()))
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &LanguageCode> {
        self.0.iter()
    }
}

impl Default for LanguageSet {
    fn default() -> Self {
        Self::new(CORPUS_LANGUAGES).expect("static language list is valid")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PassageFields")]
pub struct Passage {
    pub pid: String,
    pub lang: LanguageCode,
    pub title: String,
    pub text: String,
}

#[derive(Deserialize)]
struct PassageFields {
    pid: String,
    lang: LanguageCode,
    #[serde(default)]
    title: String,
    text: String,
}

impl TryFrom<PassageFields> for Passage {
    type Error = String;

    fn try_from(p: PassageFields) -> Result<Self, String> {
        if p.text.is_empty() {
            return Err(format!("passage `{}` has empty text", p.pid));
        }
        Ok(Passage {
            pid: p.pid,
            lang: p.lang,
            title: p.title,
            text: p.text,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub qid: String,
    pub lang: LanguageCode,
    pub text: String,
    #[serde(default)]
    pub gold_answers: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_id: Option<String>,
}

/// One ranked retrieval hit. Ranks are 1-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub pid: String,
    pub score: f64,
    pub rank: u32,
}

/// Ranked passages for one question, best first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RetrievalFields")]
pub struct RetrievalResult {
    pub qid: String,
    hits: Vec<Hit>,
}

#[derive(Deserialize)]
struct RetrievalFields {
    qid: String,
    hits: Vec<Hit>,
}

impl TryFrom<RetrievalFields> for RetrievalResult {
    type Error = Error;

    fn try_from(r: RetrievalFields) -> Result<Self> {
        RetrievalResult::new(r.qid, r.hits)
    }
}

impl RetrievalResult {
    /// Checks that scores are non-increasing, ranks run 1, 2, 3, ... and no
    /// pid repeats.
    pub fn new(qid: impl Into<String>, hits: Vec<Hit>) -> Result<Self> {
        let qid = qid.into();
        let invalid = |reason: String| Error::InvalidRetrieval {
            qid: qid.clone(),
            reason,
        };
        let mut seen = HashSet::with_capacity(hits.len());
        for (i, hit) in hits.iter().enumerate() {
            if hit.rank as usize != i + 1 {
                return Err(invalid(format!(
                    "hit {} has rank {}, expected {}",
                    i,
                    hit.rank,
                    i + 1
                )));
            }
            if !hit.score.is_finite() {
                return Err(invalid(format!("non-finite score at rank {}", hit.rank)));
            }
            if i > 0 && hit.score > hits[i - 1].score {
                return Err(invalid(format!("score increases at rank {}", hit.rank)));
            }
            if !seen.insert(hit.pid.as_str()) {
                return Err(invalid(format!("duplicate pid `{}`", hit.pid)));
            }
        }
        Ok(Self { qid, hits })
    }

    /// Builds a result from `(pid, score)` pairs already in rank order.
    pub fn from_ranked<I>(qid: impl Into<String>, ranked: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, f64)>,
    {
        let hits = ranked
            .into_iter()
            .enumerate()
            .map(|(i, (pid, score))| Hit {
                pid,
                score,
                rank: i as u32 + 1,
            })
            .collect();
        Self::new(qid, hits)
    }

    pub fn hits(&self) -> &[Hit] {
        &self.hits
    }

    /// Hits with rank at most `k`.
    pub fn top(&self, k: usize) -> &[Hit] {
        &self.hits[..k.min(self.hits.len())]
    }

    pub fn len(&self) -> usize {
        self.hits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hits.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Translation,
    Similarity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupMember {
    pub qid: String,
    pub lang: LanguageCode,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cosine: Option<f64>,
}

/// Questions asking the same thing in different languages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GroupFields")]
pub struct QuestionGroup {
    pub group_id: String,
    members: Vec<GroupMember>,
}

#[derive(Deserialize)]
struct GroupFields {
    group_id: String,
    members: Vec<GroupMember>,
}

impl TryFrom<GroupFields> for QuestionGroup {
    type Error = Error;

    fn try_from(g: GroupFields) -> Result<Self> {
        QuestionGroup::new(g.group_id, g.members)
    }
}

impl QuestionGroup {
    /// Validates the structural invariants: at least two members, distinct
    /// question ids, at most one member per language, and a finite cosine on
    /// every similarity-mined member.
    pub fn new(group_id: impl Into<String>, members: Vec<GroupMember>) -> Result<Self> {
        let group_id = group_id.into();
        let invalid = |reason: String| Error::InvalidGroup {
            group_id: group_id.clone(),
            reason,
        };
        if members.len() < 2 {
            return Err(invalid(format!("{} member(s), need at least 2", members.len())));
        }
        let mut langs = HashSet::new();
        let mut qids = HashSet::new();
        for m in &members {
            if !langs.insert(&m.lang) {
                return Err(invalid(format!("two members in language `{}`", m.lang)));
            }
            if !qids.insert(&m.qid) {
                return Err(invalid(format!("question `{}` listed twice", m.qid)));
            }
            if m.provenance == Provenance::Similarity && !m.cosine.is_some_and(f64::is_finite) {
                return Err(invalid(format!(
                    "similarity member `{}` has no cosine",
                    m.qid
                )));
            }
        }
        Ok(Self { group_id, members })
    }

    pub fn members(&self) -> &[GroupMember] {
        &self.members
    }

    pub fn member_in(&self, lang: &LanguageCode) -> Option<&GroupMember> {
        self.members.iter().find(|m| &m.lang == lang)
    }

    /// Rejects similarity members whose cosine is not strictly above
    /// `threshold`.
    pub fn check_threshold(&self, threshold: f64) -> Result<()> {
        for m in &self.members {
            if let (Provenance::Similarity, Some(c)) = (m.provenance, m.cosine) {
                if c <= threshold {
                    return Err(Error::InvalidGroup {
                        group_id: self.group_id.clone(),
                        reason: format!("cosine {c} of `{}` not above threshold {threshold}", m.qid),
                    });
                }
            }
        }
        Ok(())
    }

    /// Keeps only members in `langs`; `None` if fewer than two remain.
    pub fn restrict_to(&self, langs: &BTreeSet<LanguageCode>) -> Option<Self> {
        let members: Vec<_> = self
            .members
            .iter()
            .filter(|m| langs.contains(&m.lang))
            .cloned()
            .collect();
        Self::new(self.group_id.clone(), members).ok()
    }
}

/// An answer produced by an external generator for one question.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub qid: String,
    pub lang: LanguageCode,
    /// Passage shown to the generator; `None` when it saw the question only.
    pub context_pid: Option<String>,
    pub answer: String,
}

/// Closed taxonomy of cross-language inconsistency causes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorType {
    TranslationIssue,
    RetrieverIssue,
    AnswerExtractorIssue,
    InconsistentFacts,
    GranularityMismatch,
    UnrelatedContext,
    RelatedNoAnswer,
}

impl ErrorType {
    pub const ALL: [ErrorType; 7] = [
        ErrorType::TranslationIssue,
        ErrorType::RetrieverIssue,
        ErrorType::AnswerExtractorIssue,
        ErrorType::InconsistentFacts,
        ErrorType::GranularityMismatch,
        ErrorType::UnrelatedContext,
        ErrorType::RelatedNoAnswer,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorType::TranslationIssue => "translation_issue",
            ErrorType::RetrieverIssue => "retriever_issue",
            ErrorType::AnswerExtractorIssue => "answer_extractor_issue",
            ErrorType::InconsistentFacts => "inconsistent_facts",
            ErrorType::GranularityMismatch => "granularity_mismatch",
            ErrorType::UnrelatedContext => "unrelated_context",
            ErrorType::RelatedNoAnswer => "related_no_answer",
        }
    }
}

impl fmt::Display for ErrorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A human judgment about why a group's answers diverge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorLabel {
    pub group_id: String,
    pub error_type: ErrorType,
    #[serde(default)]
    pub note: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang: Option<LanguageCode>,
}
