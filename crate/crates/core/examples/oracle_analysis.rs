//! Oracle consistency analysis on the bundled fixture, step by step:
//! keep groups whose top-20 in-language contexts hold the gold answer in at
//! least two languages, score each language's answer, then count rows whose
//! scores diverge.
//!
//! $ cargo run --example oracle_analysis

use std::path::PathBuf;

use xorqa::analysis::{
    build_consistency_matrix, error_distribution, inconsistency_rate, index_retrievals,
    oracle_filter, Divergence, GoldPolicy, OracleOptions,
};
use xorqa::model::AnswerRecord;
use xorqa::records::{load_answers, load_groups, load_labels, load_retrievals, Corpus, QuestionSet};
use xorqa::report::emit_heatmap_data;

fn main() -> xorqa::Result<()> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/protocol");
    let corpus = Corpus::load(dir.join("passages.jsonl"))?;
    let questions = QuestionSet::load(dir.join("questions.jsonl"))?;
    let groups = load_groups(dir.join("groups.jsonl"))?;
    let retrievals = index_retrievals(load_retrievals(dir.join("retrievals.jsonl"))?);
    let golds = questions.golds();

    let kept = oracle_filter(&groups, &retrievals, &corpus, &golds, OracleOptions::default())?;
    println!("{} of {} groups kept", kept.len(), groups.len());
    for s in &kept {
        let ctx: Vec<String> = s.contexts.iter().map(|c| format!("{}={}@{}", c.lang, c.pid, c.rank)).collect();
        println!("  {:<4} {}", s.group.group_id, ctx.join(" "));
    }

    // Only answers of the surviving members enter the matrix.
    let retained: Vec<_> = kept.iter().map(|s| s.group.clone()).collect();
    let answers: Vec<AnswerRecord> = load_answers(dir.join("answers.jsonl"))?
        .into_iter()
        .filter(|a| retained.iter().any(|g| g.members().iter().any(|m| m.qid == a.qid)))
        .collect();
    let build = build_consistency_matrix(&retained, &answers, &golds, GoldPolicy::AsProvided)?;
    for w in &build.warnings {
        println!("warning: {w}");
    }

    println!("\nheatmap.csv:\n{}", emit_heatmap_data(&build.matrix));

    for d in [Divergence::default(), Divergence::Answers] {
        let s = inconsistency_rate(&build.matrix, d)?;
        println!("{d:?}: {}/{} = {:.3}", s.inconsistent, s.total, s.rate);
    }

    let hist = error_distribution(&load_labels(dir.join("labels.jsonl"))?);
    println!("\n{} error labels", hist.total);
    for (t, n) in hist.counts.iter().filter(|(_, &n)| n > 0) {
        println!("  {:<24} {n}", t.as_str());
    }
    Ok(())
}
