//! Oracles and fixtures shared by the integration tests and the acceptance
//! runner. The oracles here are deliberately written differently from the
//! library code they check.

#![allow(dead_code)]

pub mod closure;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use xorqa::analysis::{Cell, ConsistencyMatrix, MatrixRow};
use xorqa::embedding::EmbeddingMatrix;
use xorqa::model::{
    AnswerRecord, ErrorLabel, GroupMember, LanguageCode, Provenance, Question, QuestionGroup,
    RetrievalResult,
};
use xorqa::pairing::Translation;
use xorqa::records::{read_records, Corpus, QuestionSet};
use xorqa::report::ReportBundle;

pub fn lang(code: &str) -> LanguageCode {
    LanguageCode::new(code).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- protocol

pub fn protocol_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/protocol")
}

pub struct Protocol {
    pub corpus: Corpus,
    pub questions: QuestionSet,
    pub groups: Vec<QuestionGroup>,
    pub retrievals: Vec<RetrievalResult>,
    pub answers: Vec<AnswerRecord>,
    pub labels: Vec<ErrorLabel>,
}

pub fn load_protocol() -> Protocol {
    let dir = protocol_dir();
    Protocol {
        corpus: Corpus::load(dir.join("passages.jsonl")).unwrap(),
        questions: QuestionSet::load(dir.join("questions.jsonl")).unwrap(),
        groups: read_records(dir.join("groups.jsonl")).unwrap(),
        retrievals: read_records(dir.join("retrievals.jsonl")).unwrap(),
        answers: read_records(dir.join("answers.jsonl")).unwrap(),
        labels: read_records(dir.join("labels.jsonl")).unwrap(),
    }
}

/// Hand-derived expectations: chosen context `(pid, rank)` and cell
/// `(f1, em, no_gold)` per group and language, plus inconsistent/total
/// counts in both divergence modes.
#[derive(Debug, Deserialize)]
pub struct Expected {
    pub contexts: BTreeMap<String, BTreeMap<String, (String, u32)>>,
    pub cells: BTreeMap<String, BTreeMap<String, (f64, bool, bool)>>,
    pub by_score: (usize, usize),
    pub by_answer: (usize, usize),
}

pub fn load_expected(name: &str) -> Expected {
    let text = std::fs::read_to_string(protocol_dir().join(name)).unwrap();
    serde_json::from_str(&text).unwrap()
}

/// Compares a bundle against the golden expectation, describing the first
/// difference found.
pub fn compare_with_expected(bundle: &ReportBundle, expected: &Expected) -> Result<(), String> {
    let contexts: BTreeMap<String, BTreeMap<String, (String, u32)>> = bundle
        .selected
        .iter()
        .map(|s| {
            let per_lang = s
                .contexts
                .iter()
                .map(|c| (c.lang.to_string(), (c.pid.clone(), c.rank)))
                .collect();
            (s.group.group_id.clone(), per_lang)
        })
        .collect();
    if contexts != expected.contexts {
        return Err(format!(
            "contexts differ:\n got {contexts:?}\nwant {:?}",
            expected.contexts
        ));
    }
    let matrix = bundle.matrix.as_ref().ok_or("no matrix")?;
    let cells: BTreeMap<String, BTreeMap<String, (f64, bool, bool)>> = matrix
        .rows()
        .iter()
        .map(|r| {
            let per_lang = r
                .cells
                .iter()
                .map(|(l, c)| (l.to_string(), (c.f1, c.em, c.no_gold)))
                .collect();
            (r.group_id.clone(), per_lang)
        })
        .collect();
    if cells.keys().ne(expected.cells.keys()) {
        return Err(format!("matrix rows differ: {:?}", cells.keys()));
    }
    for (g, want) in &expected.cells {
        let got = &cells[g];
        if got.keys().ne(want.keys()) {
            return Err(format!("{g}: cell languages {:?}", got.keys()));
        }
        for (l, &(f1, em, no_gold)) in want {
            let (gf1, gem, gng) = got[l];
            if (gf1 - f1).abs() > 1e-12 || gem != em || gng != no_gold {
                return Err(format!(
                    "{g}/{l}: got ({gf1}, {gem}, {gng}), want ({f1}, {em}, {no_gold})"
                ));
            }
        }
    }
    let rates = bundle.rates.as_ref().ok_or("no rates")?;
    let got_score = (rates.by_score.inconsistent, rates.by_score.total);
    let got_answer = (rates.by_answer.inconsistent, rates.by_answer.total);
    if got_score != expected.by_score || got_answer != expected.by_answer {
        return Err(format!(
            "rates: score {got_score:?} answer {got_answer:?}, want {:?} {:?}",
            expected.by_score, expected.by_answer
        ));
    }
    let want_rate = expected.by_score.0 as f64 / expected.by_score.1 as f64;
    if rates.by_score.rate != want_rate {
        return Err(format!("rate {} != {want_rate}", rates.by_score.rate));
    }
    Ok(())
}

// -------------------------------------------------------------------- MIPS

pub fn random_matrix(rng: &mut impl Rng, prefix: &str, n: usize, dim: usize) -> EmbeddingMatrix {
    let mut m = EmbeddingMatrix::new(dim).unwrap();
    let mut v = vec![0f32; dim];
    for i in 0..n {
        v.iter_mut().for_each(|x| *x = rng.gen_range(-1.0..1.0));
        m.push(format!("{prefix}{i:05}"), &v).unwrap();
    }
    m
}

/// Scores every passage, sorts the whole list, truncates.
pub fn brute_force(passages: &EmbeddingMatrix, query: &[f32], k: usize) -> Vec<(String, f64)> {
    let mut all: Vec<(String, f64)> = passages
        .rows()
        .map(|(id, row)| {
            let mut s = 0f64;
            for i in 0..row.len() {
                s += f64::from(row[i]) * f64::from(query[i]);
            }
            (id.to_string(), s)
        })
        .collect();
    all.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap()
            .then_with(|| a.0.cmp(&b.0))
    });
    all.truncate(k);
    all
}

/// Checks pids, ranks and bit-exact scores against the brute-force scan.
pub fn matches_brute_force(
    result: &RetrievalResult,
    passages: &EmbeddingMatrix,
    query: &[f32],
    k: usize,
) -> Result<(), String> {
    let want = brute_force(passages, query, k);
    if result.len() != want.len() {
        return Err(format!("{}: {} hits, want {}", result.qid, result.len(), want.len()));
    }
    for (i, (hit, (pid, score))) in result.hits().iter().zip(&want).enumerate() {
        if &hit.pid != pid || hit.rank as usize != i + 1 || hit.score.to_bits() != score.to_bits() {
            return Err(format!(
                "{} rank {}: got ({}, {}, {}), want ({pid}, {}, {score})",
                result.qid,
                i + 1,
                hit.pid,
                hit.rank,
                hit.score,
                i + 1
            ));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- token F1

pub struct F1Case {
    pub prediction: &'static str,
    pub golds: &'static [&'static str],
    pub lang: &'static str,
    /// Hand-derived value as a fraction.
    pub expected: (u32, u32),
}

const fn case(
    prediction: &'static str,
    golds: &'static [&'static str],
    lang: &'static str,
    expected: (u32, u32),
) -> F1Case {
    F1Case {
        prediction,
        golds,
        lang,
        expected,
    }
}

/// F1 cases worked out by hand: 2·overlap / (|prediction| + |gold|), max
/// over golds.
pub const F1_CASES: &[F1Case] = &[
    case("the legal drinking age is 21", &["21"], "en", (2, 7)),
    case("Paris", &["paris"], "en", (1, 1)),
    case("Paris!", &["PARIS"], "en", (1, 1)),
    case("", &[""], "en", (1, 1)),
    case("   ", &[""], "en", (1, 1)),
    case("", &["x"], "en", (0, 1)),
    case("x", &[""], "en", (0, 1)),
    case("x y", &[], "en", (0, 1)),
    case("Mount Everest", &["Everest"], "en", (2, 3)),
    case("Everest", &["Mount Everest", "Everest"], "en", (1, 1)),
    case("Graham Bell", &["Alexander Graham Bell"], "en", (4, 5)),
    case("the the the", &["the"], "en", (1, 2)),
    case("a b c", &["c b a"], "en", (1, 1)),
    case("a a b", &["a b b"], "en", (2, 3)),
    case("New York City", &["York"], "en", (1, 2)),
    case("U.S.A.", &["usa"], "en", (1, 1)),
    case("rock-and-roll", &["rock and roll"], "en", (0, 1)),
    case("Hello, world", &["hello world!"], "en", (1, 1)),
    case("one two three four", &["five six", "two three"], "en", (2, 3)),
    case("1,000", &["1000"], "en", (1, 1)),
    case("(Paris)", &["\u{201c}Paris\u{201d}"], "en", (1, 1)),
    case("The Beatles", &["Beatles"], "en", (2, 3)),
    case("Helsingin yliopisto", &["Helsingin yliopisto on"], "fi", (4, 5)),
    case("\u{00dc}N\u{00cf}CODE", &["\u{00fc}n\u{00ef}code"], "fi", (1, 1)),
    case("パリ", &["パリ市"], "ja", (4, 5)),
    case("東京都", &["東京"], "ja", (4, 5)),
    case("「東京」", &["東京。"], "ja", (1, 1)),
    case("สวัสดี", &["สวัสดี"], "th", (1, 1)),
];

fn oracle_is_punct(c: char) -> bool {
    c.is_ascii_punctuation() && !"$+<=>^`|~".contains(c)
        || "\u{201c}\u{201d}\u{2018}\u{2019}「」。、・¡¿«»".contains(c)
}

fn oracle_is_spacefree(c: char) -> bool {
    let u = c as u32;
    (0x0E00..=0x0EFF).contains(&u)
        || (0x3040..=0x30FF).contains(&u)
        || (0x4E00..=0x9FFF).contains(&u)
}

/// Lowercase, drop punctuation, split on whitespace, then split
/// space-free scripts per character.
pub fn oracle_tokens(text: &str) -> Vec<String> {
    let cleaned: String = text.to_lowercase().chars().filter(|&c| !oracle_is_punct(c)).collect();
    let mut out = Vec::new();
    for word in cleaned.split_whitespace() {
        let mut pending = String::new();
        for c in word.chars() {
            if oracle_is_spacefree(c) {
                if !pending.is_empty() {
                    out.push(std::mem::take(&mut pending));
                }
                out.push(c.to_string());
            } else {
                pending.push(c);
            }
        }
        if !pending.is_empty() {
            out.push(pending);
        }
    }
    out
}

/// Multiset overlap by walking two sorted token lists.
pub fn oracle_f1(prediction: &str, golds: &[&str]) -> f64 {
    let mut p = oracle_tokens(prediction);
    p.sort();
    golds
        .iter()
        .map(|g| {
            let mut g = oracle_tokens(g);
            g.sort();
            if p.is_empty() || g.is_empty() {
                return if p.is_empty() && g.is_empty() { 1.0 } else { 0.0 };
            }
            let (mut i, mut j, mut common) = (0, 0, 0);
            while i < p.len() && j < g.len() {
                match p[i].cmp(&g[j]) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => j += 1,
                    std::cmp::Ordering::Equal => {
                        common += 1;
                        i += 1;
                        j += 1;
                    }
                }
            }
            if common == 0 {
                return 0.0;
            }
            let precision = common as f64 / p.len() as f64;
            let recall = common as f64 / g.len() as f64;
            2.0 * precision * recall / (precision + recall)
        })
        .fold(0.0, f64::max)
}

// ----------------------------------------------------------------- pairing

/// Cosine with `e1` is exactly 0.7 in f64.
pub const AT_THRESHOLD: [f32; 4] = [7.0, 7.0, 1.0, 1.0];
/// Cosine with `e1` is 0.7 + 1.09e-9.
pub const JUST_ABOVE: [f32; 2] = [34696.0, 35397.0];

pub struct PairingFixture {
    pub questions: Vec<Question>,
    pub embeddings: EmbeddingMatrix,
}

impl PairingFixture {
    pub fn in_language(&self, code: &str) -> Vec<Question> {
        self.questions
            .iter()
            .filter(|q| q.lang.as_str() == code)
            .cloned()
            .collect()
    }
}

fn question(qid: &str, code: &str) -> Question {
    Question {
        qid: qid.into(),
        lang: lang(code),
        text: format!("question {qid}"),
        gold_answers: vec![],
        group_id: None,
    }
}

/// 50 en and 50 fi questions with random 8-d embeddings, except for three
/// planted vectors: `en-anchor` = e1, `fi-at` at cosine exactly 0.7 from it
/// and `fi-above` at 0.7 + 1.09e-9.
pub fn pairing_fixture(seed: u64) -> PairingFixture {
    const DIM: usize = 8;
    let mut r = rng(seed);
    let mut questions = Vec::new();
    let mut embeddings = EmbeddingMatrix::new(DIM).unwrap();
    let mut planted = |qid: &str, code: &str, head: &[f32]| {
        let mut v = [0f32; DIM];
        v[..head.len()].copy_from_slice(head);
        questions.push(question(qid, code));
        embeddings.push(qid, &v).unwrap();
    };
    planted("en-anchor", "en", &[1.0]);
    planted("fi-at", "fi", &AT_THRESHOLD);
    planted("fi-above", "fi", &JUST_ABOVE);
    for (code, n) in [("en", 49), ("fi", 48)] {
        for i in 0..n {
            let qid = format!("{code}-{i:03}");
            let v: Vec<f32> = (0..DIM).map(|_| r.gen_range(-1.0..1.0)).collect();
            questions.push(question(&qid, code));
            embeddings.push(qid, &v).unwrap();
        }
    }
    PairingFixture {
        questions,
        embeddings,
    }
}

/// Fifty en/fi pairs in orthogonal planes with known cosines and
/// translations whose BLEU has a closed form.
pub struct BleuFixture {
    pub questions: Vec<Question>,
    pub embeddings: EmbeddingMatrix,
    pub translations: Vec<Translation>,
    pub cosines: Vec<f64>,
    pub bleus: Vec<f64>,
}

pub fn bleu_fixture() -> BleuFixture {
    const N: usize = 50;
    let dim = 2 * N;
    let mut questions = Vec::new();
    let mut embeddings = EmbeddingMatrix::new(dim).unwrap();
    let mut translations = Vec::new();
    let mut cosines = Vec::new();
    let mut bleus = Vec::new();
    for i in 0..N {
        let (en, fi) = (format!("en-{i:02}"), format!("fi-{i:02}"));
        let mut u = vec![0f32; dim];
        u[2 * i] = 1.0;
        let b = (i % 10) as f32;
        let mut v = vec![0f32; dim];
        v[2 * i] = 10.0;
        v[2 * i + 1] = b;
        embeddings.push(en.clone(), &u).unwrap();
        embeddings.push(fi.clone(), &v).unwrap();
        // cos = 10 / sqrt(100 + b^2), always above 0.7.
        cosines.push(10.0 / (100.0 + f64::from(b * b)).sqrt());

        let words = [
            format!("alpha{i}"),
            format!("beta{i}"),
            format!("gamma{i}"),
            format!("delta{i}"),
        ];
        let reference = words.join(" ");
        // A prefix of m reference words: every clipped precision is 1 and
        // the brevity penalty is exp(1 - 4/m). No shared word scores 0.
        let (candidate, bleu) = match i % 5 {
            4 => ("unrelated".to_string(), 0.0),
            r => {
                let m = 4 - r;
                (words[..m].join(" "), (1.0 - 4.0 / m as f64).exp())
            }
        };
        bleus.push(bleu);
        let mut q_en = question(&en, "en");
        q_en.text = format!("source {i}");
        let mut q_fi = question(&fi, "fi");
        q_fi.text = reference;
        questions.push(q_en);
        questions.push(q_fi);
        translations.push(Translation {
            qid: en,
            lang: lang("fi"),
            text: candidate,
        });
    }
    BleuFixture {
        questions,
        embeddings,
        translations,
        cosines,
        bleus,
    }
}

/// Textbook single-pass Pearson formula.
pub fn pearson_closed_form(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    }
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

// ------------------------------------------------------------------ matrix

pub fn cell(qid: &str, answer: &str, f1: f64) -> Cell {
    Cell {
        qid: qid.into(),
        answer: answer.into(),
        f1,
        em: f1 == 1.0,
        context_pid: None,
        no_gold: false,
    }
}

/// `total` two-cell rows; the first `divergent` disagree in F1.
pub fn synthetic_matrix(total: usize, divergent: usize) -> ConsistencyMatrix {
    let rows = (0..total)
        .map(|i| {
            let id = format!("g{i:04}");
            let fi = if i < divergent { 0.0 } else { 1.0 };
            let mut cells = BTreeMap::new();
            cells.insert(lang("en"), cell(&format!("{id}-en"), "x", 1.0));
            cells.insert(lang("fi"), cell(&format!("{id}-fi"), "x", fi));
            MatrixRow {
                group_id: id,
                cells,
            }
        })
        .collect();
    ConsistencyMatrix::from_rows(rows).unwrap()
}

pub fn translation_group(id: &str, members: &[(&str, &str)]) -> QuestionGroup {
    QuestionGroup::new(
        id,
        members
            .iter()
            .map(|(qid, code)| GroupMember {
                qid: qid.to_string(),
                lang: lang(code),
                provenance: Provenance::Translation,
                cosine: None,
            })
            .collect(),
    )
    .unwrap()
}
