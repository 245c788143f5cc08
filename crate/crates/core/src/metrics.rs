//! Answer normalization and token-level scoring.
//!
//! Normalization applies Unicode simple case folding, deletes every
//! character in a punctuation general category (`P*`), then splits on
//! Unicode whitespace. No articles are stripped in any language.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use unicode_general_category::{get_general_category, GeneralCategory};

use crate::error::{Error, Result};
use crate::model::{AnswerRecord, LanguageCode};
use crate::records::QuestionSet;

/// Splits normalized text into tokens.
///
/// The input has already been case folded and stripped of punctuation.
/// Implementations replace the default whitespace rule, e.g. with a
/// dictionary segmenter for Chinese.
pub trait Segmenter: Send + Sync {
    fn segment(&self, normalized: &str, lang: &LanguageCode) -> Vec<String>;
}

/// Whitespace splitting; characters from scripts written without spaces
/// (Han, kana, Thai, Lao, Khmer, Myanmar) become one token each.
#[derive(Clone, Copy, Debug, Default)]
pub struct WhitespaceSegmenter;

impl Segmenter for WhitespaceSegmenter {
    fn segment(&self, normalized: &str, _lang: &LanguageCode) -> Vec<String> {
        let mut tokens = Vec::new();
        for word in normalized.split_whitespace() {
            let mut run = String::new();
            for c in word.chars() {
                if is_space_free_script(c) {
                    if !run.is_empty() {
                        tokens.push(std::mem::take(&mut run));
                    }
                    tokens.push(c.to_string());
                } else {
                    run.push(c);
                }
            }
            if !run.is_empty() {
                tokens.push(run);
            }
        }
        tokens
    }
}

fn is_space_free_script(c: char) -> bool {
    matches!(c as u32,
        0x0E00..=0x0EFF      // Thai, Lao
        | 0x1000..=0x109F    // Myanmar
        | 0x1780..=0x17FF    // Khmer
        | 0x3040..=0x30FF    // Hiragana, Katakana
        | 0x31F0..=0x31FF
        | 0x3400..=0x4DBF    // CJK extension A
        | 0x4E00..=0x9FFF
        | 0xF900..=0xFAFF
        | 0xFF66..=0xFF9F    // halfwidth katakana
        | 0x20000..=0x3134F)
}

pub fn is_punctuation(c: char) -> bool {
    matches!(
        get_general_category(c),
        GeneralCategory::ConnectorPunctuation
            | GeneralCategory::DashPunctuation
            | GeneralCategory::OpenPunctuation
            | GeneralCategory::ClosePunctuation
            | GeneralCategory::InitialPunctuation
            | GeneralCategory::FinalPunctuation
            | GeneralCategory::OtherPunctuation
    )
}

fn fold(c: char) -> char {
    unicode_case_mapping::case_folded(c)
        .and_then(|u| char::from_u32(u.get()))
        .unwrap_or(c)
}

/// Case folds and strips punctuation, leaving whitespace intact.
pub fn normalize(text: &str) -> String {
    text.chars()
        .map(fold)
        .filter(|&c| !is_punctuation(c))
        .collect()
}

/// Normalization plus a pluggable segmenter.
pub struct Tokenizer {
    segmenter: Box<dyn Segmenter>,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Self::new(WhitespaceSegmenter)
    }
}

impl std::fmt::Debug for Tokenizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Tokenizer").finish_non_exhaustive()
    }
}

impl Tokenizer {
    pub fn new(segmenter: impl Segmenter + 'static) -> Self {
        Self {
            segmenter: Box::new(segmenter),
        }
    }

    pub fn tokenize(&self, text: &str, lang: &LanguageCode) -> Vec<String> {
        self.segmenter
            .segment(&normalize(text), lang)
            .into_iter()
            .filter(|t| !t.is_empty())
            .collect()
    }

    /// Max token F1 over `golds`; 0 when there are no golds.
    pub fn token_f1<S: AsRef<str>>(&self, prediction: &str, golds: &[S], lang: &LanguageCode) -> f64 {
        let pred = self.tokenize(prediction, lang);
        golds
            .iter()
            .map(|g| f1_of_tokens(&pred, &self.tokenize(g.as_ref(), lang)))
            .fold(0.0, f64::max)
    }

    pub fn exact_match<S: AsRef<str>>(&self, prediction: &str, golds: &[S], lang: &LanguageCode) -> bool {
        let pred = self.tokenize(prediction, lang);
        golds
            .iter()
            .any(|g| self.tokenize(g.as_ref(), lang) == pred)
    }

    pub fn mean_token_f1(&self, records: &[EvalRecord]) -> Result<f64> {
        if records.is_empty() {
            return Err(Error::EmptyInput("mean token F1 needs at least one record"));
        }
        let sum: f64 = records
            .iter()
            .map(|r| self.token_f1(&r.prediction, &r.golds, &r.lang))
            .sum();
        Ok(sum / records.len() as f64)
    }
}

/// F1 between two token lists under multiset overlap.
///
/// Both empty scores 1, exactly one empty scores 0.
pub fn f1_of_tokens(pred: &[String], gold: &[String]) -> f64 {
    match (pred.is_empty(), gold.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in gold {
        *counts.entry(t).or_default() += 1;
    }
    let mut overlap = 0usize;
    for t in pred {
        if let Some(n) = counts.get_mut(t.as_str()) {
            if *n > 0 {
                *n -= 1;
                overlap += 1;
            }
        }
    }
    // Same value as 2PR / (P + R), rounded once.
    (2 * overlap) as f64 / (pred.len() + gold.len()) as f64
}

pub fn normalize_and_tokenize(text: &str, lang: &LanguageCode) -> Vec<String> {
    Tokenizer::default().tokenize(text, lang)
}

pub fn token_f1<S: AsRef<str>>(prediction: &str, golds: &[S], lang: &LanguageCode) -> f64 {
    Tokenizer::default().token_f1(prediction, golds, lang)
}

pub fn exact_match<S: AsRef<str>>(prediction: &str, golds: &[S], lang: &LanguageCode) -> bool {
    Tokenizer::default().exact_match(prediction, golds, lang)
}

pub fn mean_token_f1(records: &[EvalRecord]) -> Result<f64> {
    Tokenizer::default().mean_token_f1(records)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalRecord {
    pub prediction: String,
    pub golds: Vec<String>,
    pub lang: LanguageCode,
}

/// Per-answer score line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnswerScore {
    pub qid: String,
    pub lang: LanguageCode,
    pub f1: f64,
    pub em: bool,
    /// The question had no gold answers; `f1` and `em` are 0.
    pub no_gold: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreSummary {
    pub count: usize,
    pub mean_f1: f64,
    pub exact_match_rate: f64,
}

/// One line of an `eval score` output file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScoreLine {
    Record(AnswerScore),
    Aggregate(ScoreSummary),
}

/// Scores each answer against its question's own gold answers.
pub fn score_answers(
    tokenizer: &Tokenizer,
    answers: &[AnswerRecord],
    questions: &QuestionSet,
) -> Result<(Vec<AnswerScore>, ScoreSummary)> {
    if answers.is_empty() {
        return Err(Error::EmptyInput("no answers to score"));
    }
    let mut scores = Vec::with_capacity(answers.len());
    for a in answers {
        let q = questions.resolve(&a.qid)?;
        let golds = &q.gold_answers;
        scores.push(AnswerScore {
            qid: a.qid.clone(),
            lang: q.lang.clone(),
            f1: tokenizer.token_f1(&a.answer, golds, &q.lang),
            em: tokenizer.exact_match(&a.answer, golds, &q.lang),
            no_gold: golds.is_empty(),
        });
    }
    let n = scores.len() as f64;
    let summary = ScoreSummary {
        count: scores.len(),
        mean_f1: scores.iter().map(|s| s.f1).sum::<f64>() / n,
        exact_match_rate: scores.iter().filter(|s| s.em).count() as f64 / n,
    };
    Ok((scores, summary))
}
