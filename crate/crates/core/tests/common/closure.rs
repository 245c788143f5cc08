//! Round trips of every emitted file format through its own reader, over
//! randomized instances.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Cursor;
use std::path::Path;

use proptest::collection::{btree_set, vec};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use serde::de::DeserializeOwned;
use serde::Serialize;

use xorqa::analysis::{
    error_distribution, Cell, ConsistencyMatrix, ContextChoice, InconsistencyStats, MatrixRow,
    SelectedGroup, Setting,
};
use xorqa::embedding::EmbeddingMatrix;
use xorqa::metrics::{AnswerScore, ScoreLine, ScoreSummary};
use xorqa::model::{
    AnswerRecord, ErrorLabel, ErrorType, GroupMember, Hit, LanguageCode, LanguageSet, Passage,
    Provenance, Question, QuestionGroup, RetrievalResult, CORPUS_LANGUAGES,
};
use xorqa::pairing::{PairCheck, Translation};
use xorqa::records::{parse_lines, write_lines_to, Corpus};
use xorqa::report::{emit_heatmap_data, parse_heatmap, RateReport};

pub const CASES: u32 = 1000;

pub type Check = fn(u32) -> Result<(), String>;

/// Every format the crate writes, with its round-trip check.
pub const FORMATS: &[(&str, Check)] = &[
    ("passage lines", passages),
    ("question lines", questions),
    ("group lines", groups),
    ("retrieval lines", retrievals),
    ("answer lines", answers),
    ("label lines", labels),
    ("embedding file", embeddings),
    ("score lines", score_lines),
    ("context lines", contexts),
    ("matrix lines", matrix_lines),
    ("heatmap csv", heatmap),
    ("rates json", rates),
    ("error histogram json", histogram),
    ("translation lines", translations),
    ("pair check lines", pair_checks),
];

fn run<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner =
        TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn lines<T: Serialize + DeserializeOwned>(records: &[T]) -> Result<Vec<T>, TestCaseError> {
    let mut buf = Vec::new();
    write_lines_to(&mut buf, records).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let parsed = parse_lines::<T, _>(Cursor::new(buf), Path::new("mem"))
        .map_err(|e| TestCaseError::fail(e.to_string()))?;
    Ok(parsed.into_iter().map(|(_, r)| r).collect())
}

fn same_lines<T>(records: Vec<T>) -> Result<(), TestCaseError>
where
    T: Serialize + DeserializeOwned + PartialEq + std::fmt::Debug,
{
    let back = lines(&records)?;
    prop_assert_eq!(back, records);
    Ok(())
}

fn json_doc<T>(value: T) -> Result<(), TestCaseError>
where
    T: Serialize + DeserializeOwned + PartialEq + std::fmt::Debug,
{
    let text = serde_json::to_string_pretty(&value).unwrap();
    let back: T = serde_json::from_str(&text).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(back, value);
    Ok(())
}

// ------------------------------------------------------------- strategies

fn language() -> impl Strategy<Value = LanguageCode> {
    prop::sample::select(CORPUS_LANGUAGES.to_vec()).prop_map(|l| LanguageCode::new(l).unwrap())
}

fn languages(min: usize, max: usize) -> impl Strategy<Value = Vec<LanguageCode>> {
    prop::sample::subsequence(CORPUS_LANGUAGES.to_vec(), min..=max)
        .prop_shuffle()
        .prop_map(|v| v.into_iter().map(|l| LanguageCode::new(l).unwrap()).collect())
}

fn text() -> impl Strategy<Value = String> {
    any::<String>()
}

fn nonempty_text() -> impl Strategy<Value = String> {
    "(?s).{1,40}"
}

fn id() -> impl Strategy<Value = String> {
    "[a-zA-Z0-9:_\\-\u{00e4}\u{30d1}]{1,12}"
}

fn finite() -> impl Strategy<Value = f64> {
    prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO
}

fn unit() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(1.0), 0.0..=1.0f64]
}

fn error_type() -> impl Strategy<Value = ErrorType> {
    prop::sample::select(ErrorType::ALL.to_vec())
}

/// Distinct ids, made unique by an index prefix.
fn unique_ids(max: usize) -> impl Strategy<Value = Vec<String>> {
    vec(id(), 0..max).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, s)| format!("{i}-{s}"))
            .collect()
    })
}

fn passage() -> impl Strategy<Value = Passage> {
    (id(), language(), text(), nonempty_text()).prop_map(|(pid, lang, title, text)| Passage {
        pid,
        lang,
        title,
        text,
    })
}

fn question() -> impl Strategy<Value = Question> {
    (id(), language(), text(), vec(text(), 0..4), proptest::option::of(id())).prop_map(
        |(qid, lang, text, gold_answers, group_id)| Question {
            qid,
            lang,
            text,
            gold_answers,
            group_id,
        },
    )
}

fn group() -> impl Strategy<Value = QuestionGroup> {
    (id(), languages(2, 5))
        .prop_flat_map(|(gid, langs)| {
            let n = langs.len();
            (
                Just(gid),
                Just(langs),
                vec((any::<bool>(), prop::option::of(-1.0..=1.0f64)), n),
            )
        })
        .prop_map(|(gid, langs, extra)| {
            let members = langs
                .into_iter()
                .zip(extra)
                .enumerate()
                .map(|(i, (lang, (similar, cos)))| GroupMember {
                    qid: format!("{gid}-{i}"),
                    lang,
                    provenance: if similar {
                        Provenance::Similarity
                    } else {
                        Provenance::Translation
                    },
                    cosine: if similar { Some(cos.unwrap_or(0.75)) } else { cos },
                })
                .collect();
            QuestionGroup::new(gid, members).unwrap()
        })
}

fn retrieval() -> impl Strategy<Value = RetrievalResult> {
    (id(), unique_ids(20))
        .prop_flat_map(|(qid, pids)| {
            let n = pids.len();
            (Just(qid), Just(pids), vec(finite(), n))
        })
        .prop_map(|(qid, pids, mut scores)| {
            scores.sort_by(|a, b| b.total_cmp(a));
            let hits = pids
                .into_iter()
                .zip(scores)
                .enumerate()
                .map(|(i, (pid, score))| Hit {
                    pid,
                    score,
                    rank: i as u32 + 1,
                })
                .collect();
            RetrievalResult::new(qid, hits).unwrap()
        })
}

fn answer() -> impl Strategy<Value = AnswerRecord> {
    (id(), language(), proptest::option::of(id()), text()).prop_map(
        |(qid, lang, context_pid, answer)| AnswerRecord {
            qid,
            lang,
            context_pid,
            answer,
        },
    )
}

fn label() -> impl Strategy<Value = ErrorLabel> {
    (id(), error_type(), text(), proptest::option::of(language())).prop_map(
        |(group_id, error_type, note, lang)| ErrorLabel {
            group_id,
            error_type,
            note,
            lang,
        },
    )
}

fn embedding_matrix() -> impl Strategy<Value = EmbeddingMatrix> {
    (1usize..12, unique_ids(10))
        .prop_flat_map(|(dim, ids)| {
            let n = ids.len();
            let value = prop::num::f32::NORMAL | prop::num::f32::SUBNORMAL | prop::num::f32::ZERO;
            (Just(dim), Just(ids), vec(vec(value, dim), n))
        })
        .prop_map(|(dim, ids, rows)| EmbeddingMatrix::from_rows(dim, ids.into_iter().zip(rows)).unwrap())
}

fn cell() -> impl Strategy<Value = Cell> {
    (id(), text(), unit(), any::<bool>(), proptest::option::of(id()), any::<bool>()).prop_map(
        |(qid, answer, f1, em, context_pid, no_gold)| Cell {
            qid,
            answer,
            f1,
            em,
            context_pid,
            no_gold,
        },
    )
}

fn matrix() -> impl Strategy<Value = ConsistencyMatrix> {
    vec(
        (id(), btree_set(language(), 0..5)).prop_flat_map(|(gid, langs)| {
            let n = langs.len();
            (Just(gid), Just(langs), vec(cell(), n))
        }),
        0..8,
    )
    .prop_map(|rows| {
        let rows = rows
            .into_iter()
            .enumerate()
            .map(|(i, (gid, langs, cells)): (usize, (String, BTreeSet<LanguageCode>, Vec<Cell>))| {
                MatrixRow {
                    group_id: format!("{i}-{gid}"),
                    cells: langs.into_iter().zip(cells).collect::<BTreeMap<_, _>>(),
                }
            })
            .collect();
        ConsistencyMatrix::from_rows(rows).unwrap()
    })
}

fn context_choice() -> impl Strategy<Value = ContextChoice> {
    (id(), language(), id(), finite(), 1u32..2000).prop_map(|(qid, lang, pid, score, rank)| {
        ContextChoice {
            qid,
            lang,
            pid,
            score,
            rank,
        }
    })
}

fn stats() -> impl Strategy<Value = InconsistencyStats> {
    (1usize..10_000)
        .prop_flat_map(|total| (0..=total, Just(total)))
        .prop_map(|(inconsistent, total)| InconsistencyStats {
            inconsistent,
            total,
            rate: inconsistent as f64 / total as f64,
        })
}

// ------------------------------------------------------------------ checks

pub fn passages(cases: u32) -> Result<(), String> {
    run(cases, vec(passage(), 0..6), |ps| {
        let mut buf = Vec::new();
        write_lines_to(&mut buf, &ps).unwrap();
        let langs = LanguageSet::default();
        let unique: BTreeSet<&str> = ps.iter().map(|p| p.pid.as_str()).collect();
        match Corpus::from_reader(Cursor::new(buf), Path::new("mem"), &langs) {
            Ok(c) => {
                prop_assert_eq!(unique.len(), ps.len());
                prop_assert_eq!(c.passages(), &ps[..]);
            }
            Err(e) => {
                prop_assert!(unique.len() < ps.len(), "rejected distinct pids: {}", e);
                prop_assert_eq!(e.kind(), "duplicate_id");
            }
        }
        Ok(())
    })
}

pub fn questions(cases: u32) -> Result<(), String> {
    run(cases, vec(question(), 0..6), same_lines)
}

pub fn groups(cases: u32) -> Result<(), String> {
    run(cases, vec(group(), 0..6), same_lines)
}

pub fn retrievals(cases: u32) -> Result<(), String> {
    run(cases, vec(retrieval(), 0..4), same_lines)
}

pub fn answers(cases: u32) -> Result<(), String> {
    run(cases, vec(answer(), 0..6), same_lines)
}

pub fn labels(cases: u32) -> Result<(), String> {
    run(cases, vec(label(), 0..6), same_lines)
}

pub fn embeddings(cases: u32) -> Result<(), String> {
    run(cases, embedding_matrix(), |m| {
        let bytes = m.to_bytes();
        let back = EmbeddingMatrix::from_bytes(&bytes).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(back.to_bytes(), bytes);
        prop_assert_eq!(back, m);
        Ok(())
    })
}

pub fn score_lines(cases: u32) -> Result<(), String> {
    let record = (id(), language(), unit(), any::<bool>(), any::<bool>()).prop_map(
        |(qid, lang, f1, em, no_gold)| {
            ScoreLine::Record(AnswerScore {
                qid,
                lang,
                f1,
                em,
                no_gold,
            })
        },
    );
    let aggregate = (0usize..1000, unit(), unit()).prop_map(|(count, mean_f1, exact_match_rate)| {
        ScoreLine::Aggregate(ScoreSummary {
            count,
            mean_f1,
            exact_match_rate,
        })
    });
    run(cases, vec(prop_oneof![record, aggregate], 0..6), same_lines)
}

pub fn contexts(cases: u32) -> Result<(), String> {
    let selected = (group(), vec(context_choice(), 0..4))
        .prop_map(|(group, contexts)| SelectedGroup { group, contexts });
    run(cases, vec(selected, 0..4), same_lines)
}

pub fn matrix_lines(cases: u32) -> Result<(), String> {
    run(cases, matrix(), |m| {
        let rows = lines(m.rows())?;
        let back = ConsistencyMatrix::from_rows(rows).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(back, m);
        Ok(())
    })
}

pub fn heatmap(cases: u32) -> Result<(), String> {
    run(cases, matrix(), |m| {
        let csv = emit_heatmap_data(&m);
        let parsed = parse_heatmap(&csv).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let langs = m.languages();
        prop_assert_eq!(&parsed.languages, &langs);
        prop_assert_eq!(parsed.rows.len(), m.len());
        for ((gid, cells), row) in parsed.rows.iter().zip(m.rows()) {
            prop_assert_eq!(gid, &row.group_id);
            for (value, lang) in cells.iter().zip(&langs) {
                let want = row.cells.get(lang).map(|c| c.f1.to_bits());
                prop_assert_eq!(value.map(f64::to_bits), want);
            }
        }
        prop_assert_eq!(emit_heatmap_data(&m), csv);
        Ok(())
    })
}

pub fn rates(cases: u32) -> Result<(), String> {
    let setting = prop_oneof![Just(Setting::Oracle), Just(Setting::NonOracle)];
    let report = (setting, 0usize..500, 0usize..500, finite(), stats(), stats()).prop_map(
        |(setting, groups_in, groups_selected, epsilon, by_score, by_answer)| RateReport {
            setting,
            groups_in,
            groups_selected,
            epsilon: epsilon.abs(),
            by_score,
            by_answer,
        },
    );
    run(cases, report, json_doc)
}

pub fn histogram(cases: u32) -> Result<(), String> {
    run(cases, vec(label(), 0..30), |labels| {
        let h = error_distribution(&labels);
        prop_assert_eq!(h.counts.values().sum::<usize>(), labels.len());
        json_doc(h)
    })
}

pub fn translations(cases: u32) -> Result<(), String> {
    let t = (id(), language(), text()).prop_map(|(qid, lang, text)| Translation { qid, lang, text });
    run(cases, vec(t, 0..6), same_lines)
}

pub fn pair_checks(cases: u32) -> Result<(), String> {
    let c = (id(), id(), id(), -1.0..=1.0f64, unit()).prop_map(
        |(group_id, src_qid, dst_qid, cosine, bleu)| PairCheck {
            group_id,
            src_qid,
            dst_qid,
            cosine,
            bleu,
        },
    );
    run(cases, vec(c, 0..6), same_lines)
}
