//! Building question groups across languages.
//!
//! Groups come from two sources: translation pair files, and pairs mined
//! by cosine similarity of sentence embeddings. Mined pairs can be checked
//! against translations with sentence BLEU and a Pearson correlation.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::index::dot;
use crate::metrics::Tokenizer;
use crate::model::{GroupMember, LanguageCode, Provenance, Question, QuestionGroup};
use crate::records::{read_lines, QuestionSet};

pub const DEFAULT_THRESHOLD: f64 = 0.7;

const BLEU_MAX_ORDER: usize = 4;
const BLEU_EPSILON: f64 = 0.1;

/// Cosine similarity computed in `f64` as `u·v / sqrt(|u|²|v|²)`.
pub fn cosine_similarity(u: &[f32], v: &[f32]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    cosine_from_parts(dot(u, v), dot(u, u), dot(v, v))
}

fn cosine_from_parts(uv: f64, uu: f64, vv: f64) -> Result<f64> {
    if uu == 0.0 || vv == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((uv / (uu * vv).sqrt()).clamp(-1.0, 1.0))
}

/// Questions of one language subset together with their embeddings.
#[derive(Clone, Copy, Debug)]
pub struct PairingSide<'a> {
    pub questions: &'a [Question],
    pub embeddings: &'a EmbeddingMatrix,
}

impl<'a> PairingSide<'a> {
    pub fn new(questions: &'a [Question], embeddings: &'a EmbeddingMatrix) -> Self {
        Self {
            questions,
            embeddings,
        }
    }

    /// Questions sorted by qid with their vectors and squared norms.
    fn resolve(&self) -> Result<Vec<(&'a Question, &'a [f32], f64)>> {
        let mut out = Vec::with_capacity(self.questions.len());
        for q in self.questions {
            let v = self
                .embeddings
                .get(&q.qid)
                .ok_or_else(|| Error::MissingEmbedding(q.qid.clone()))?;
            out.push((q, v, dot(v, v)));
        }
        out.sort_by(|a, b| a.0.qid.cmp(&b.0.qid));
        Ok(out)
    }
}

/// Group id for a mined pair, independent of which side was the source.
pub fn mined_group_id(a: &str, b: &str) -> String {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    format!("sim:{lo}:{hi}")
}

/// Emits one two-member group per question pair whose cosine similarity is
/// strictly greater than `threshold`.
///
/// Pairs within the same language and pairs of a question with itself are
/// skipped, and each unordered pair is emitted once. Output is ordered by
/// source qid, then destination qid.
pub fn mine_pairs(
    src: PairingSide<'_>,
    dst: PairingSide<'_>,
    threshold: f64,
) -> Result<Vec<QuestionGroup>> {
    if src.embeddings.dim() != dst.embeddings.dim() {
        return Err(Error::DimMismatch {
            expected: src.embeddings.dim(),
            found: dst.embeddings.dim(),
        });
    }
    let src = src.resolve()?;
    let dst = dst.resolve()?;
    if let Some((q, ..)) = src.iter().chain(&dst).find(|(_, _, n)| *n == 0.0) {
        return Err(Error::InvalidGroup {
            group_id: q.qid.clone(),
            reason: "zero embedding vector".into(),
        });
    }

    let candidates: Vec<Vec<(usize, usize, f64)>> = src
        .par_iter()
        .enumerate()
        .map(|(i, (sq, sv, sn))| {
            let mut found = Vec::new();
            for (j, (dq, dv, dn)) in dst.iter().enumerate() {
                if sq.qid == dq.qid || sq.lang == dq.lang {
                    continue;
                }
                let cos = cosine_from_parts(dot(sv, dv), *sn, *dn)
                    .expect("zero norms rejected above");
                if cos > threshold {
                    found.push((i, j, cos));
                }
            }
            found
        })
        .collect();

    let mut seen = HashSet::new();
    let mut groups = Vec::new();
    for (i, j, cos) in candidates.into_iter().flatten() {
        let (s, d) = (src[i].0, dst[j].0);
        let id = mined_group_id(&s.qid, &d.qid);
        if !seen.insert(id.clone()) {
            continue;
        }
        let member = |q: &Question| GroupMember {
            qid: q.qid.clone(),
            lang: q.lang.clone(),
            provenance: Provenance::Similarity,
            cosine: Some(cos),
        };
        groups.push(QuestionGroup::new(id, vec![member(s), member(d)])?);
    }
    Ok(groups)
}

/// Reads a pair file of translation groups. Every member must carry
/// translation provenance; group invariants are checked per line.
pub fn ingest_translation_pairs(path: impl AsRef<Path>) -> Result<Vec<QuestionGroup>> {
    let path = path.as_ref();
    let mut groups = Vec::new();
    for (line, g) in read_lines::<QuestionGroup>(path)? {
        if let Some(m) = g
            .members()
            .iter()
            .find(|m| m.provenance != Provenance::Translation)
        {
            return Err(Error::Record {
                path: path.to_path_buf(),
                line,
                message: format!(
                    "group `{}`: member `{}` is not a translation",
                    g.group_id, m.qid
                ),
            });
        }
        groups.push(g);
    }
    Ok(groups)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BleuScore {
    pub score: f64,
    /// Candidate or reference had no tokens; `score` is 0.
    pub empty_input: bool,
}

/// Sentence BLEU on token lists: clipped n-gram precision up to order 4
/// with uniform weights, brevity penalty, and zero match counts replaced
/// by 0.1.
///
/// Candidates shorter than four tokens use uniform weights over the orders
/// they have, so a sentence scored against itself is always 1. No unigram
/// match scores 0.
pub fn bleu_of_tokens(candidate: &[String], reference: &[String]) -> BleuScore {
    let c = candidate.len();
    let r = reference.len();
    if c == 0 || r == 0 {
        return BleuScore {
            score: 0.0,
            empty_input: true,
        };
    }
    let max_order = BLEU_MAX_ORDER.min(c);
    let weight = 1.0 / max_order as f64;
    let mut log_sum = 0.0;
    for n in 1..=max_order {
        let mut ref_counts: HashMap<&[String], usize> = HashMap::new();
        for g in reference.windows(n) {
            *ref_counts.entry(g).or_default() += 1;
        }
        let mut cand_counts: HashMap<&[String], usize> = HashMap::new();
        for g in candidate.windows(n) {
            *cand_counts.entry(g).or_default() += 1;
        }
        let matches: usize = cand_counts
            .iter()
            .map(|(g, &k)| k.min(ref_counts.get(g).copied().unwrap_or(0)))
            .sum();
        let total = (c + 1 - n).max(1) as f64;
        if matches == 0 && n == 1 {
            return BleuScore {
                score: 0.0,
                empty_input: false,
            };
        }
        let precision = if matches == 0 {
            BLEU_EPSILON / total
        } else {
            matches as f64 / total
        };
        log_sum += weight * precision.ln();
    }
    let brevity = if c > r {
        1.0
    } else {
        (1.0 - r as f64 / c as f64).exp()
    };
    BleuScore {
        score: (brevity * log_sum.exp()).clamp(0.0, 1.0),
        empty_input: false,
    }
}

pub fn sentence_bleu(candidate: &str, reference: &str, lang: &LanguageCode) -> BleuScore {
    let t = Tokenizer::default();
    bleu_of_tokens(&t.tokenize(candidate, lang), &t.tokenize(reference, lang))
}

/// Sample Pearson correlation coefficient.
pub fn pearson_correlation(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Correlation(format!(
            "length mismatch: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::Correlation("need at least two points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Correlation("zero variance".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Machine translation of a question into another language.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Translation {
    pub qid: String,
    pub lang: LanguageCode,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairCheck {
    pub group_id: String,
    pub src_qid: String,
    pub dst_qid: String,
    pub cosine: f64,
    pub bleu: f64,
}

/// For each mined two-member group, scores the translation of the first
/// member into the second member's language against the second member's
/// text. Groups without such a translation are skipped.
pub fn check_pairs_with_translations(
    groups: &[QuestionGroup],
    questions: &QuestionSet,
    translations: &[Translation],
) -> Result<Vec<PairCheck>> {
    let by_key: HashMap<(&str, &LanguageCode), &str> = translations
        .iter()
        .map(|t| ((t.qid.as_str(), &t.lang), t.text.as_str()))
        .collect();
    let mut out = Vec::new();
    for g in groups {
        let [src, dst] = g.members() else { continue };
        let Some(cosine) = src.cosine.or(dst.cosine) else {
            continue;
        };
        let Some(translated) = by_key.get(&(src.qid.as_str(), &dst.lang)) else {
            continue;
        };
        let reference = questions.resolve(&dst.qid)?;
        out.push(PairCheck {
            group_id: g.group_id.clone(),
            src_qid: src.qid.clone(),
            dst_qid: dst.qid.clone(),
            cosine,
            bleu: sentence_bleu(translated, &reference.text, &dst.lang).score,
        });
    }
    Ok(out)
}

/// Pearson r between cosine similarity and BLEU over checked pairs.
pub fn cosine_bleu_correlation(checks: &[PairCheck]) -> Result<f64> {
    let xs: Vec<f64> = checks.iter().map(|c| c.cosine).collect();
    let ys: Vec<f64> = checks.iter().map(|c| c.bleu).collect();
    pearson_correlation(&xs, &ys)
}
