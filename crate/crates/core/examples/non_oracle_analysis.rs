//! Non-oracle analysis: every group is kept and each member reads its
//! top-ranked in-language passage from the top 1000, gold or not.
//!
//! $ cargo run --example non_oracle_analysis

use std::path::PathBuf;

use xorqa::analysis::SelectionMode;
use xorqa::records::{load_answers, load_groups, load_retrievals, Corpus, QuestionSet};
use xorqa::report::{analyze, AnalysisInputs, AnalysisOptions};

fn main() -> xorqa::Result<()> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/protocol");
    let corpus = Corpus::load(dir.join("passages.jsonl"))?;
    let questions = QuestionSet::load(dir.join("questions.jsonl"))?;
    let groups = load_groups(dir.join("groups.jsonl"))?;
    let retrievals = load_retrievals(dir.join("retrievals.jsonl"))?;
    let answers = load_answers(dir.join("answers.jsonl"))?;

    let inputs = AnalysisInputs {
        corpus: &corpus,
        questions: &questions,
        groups: &groups,
        retrievals: &retrievals,
        answers: Some(&answers),
        labels: None,
    };
    for mode in [SelectionMode::non_oracle(), SelectionMode::oracle()] {
        let bundle = analyze(inputs, AnalysisOptions::new(mode))?;
        println!("--- {:?}\n{}", mode.setting, bundle.summary());
    }

    // Contexts found only below the oracle's cut-off.
    let bundle = analyze(inputs, AnalysisOptions::new(SelectionMode::non_oracle()))?;
    for s in &bundle.selected {
        for c in s.contexts.iter().filter(|c| c.rank > 20) {
            println!("{} {}: {} at rank {}", s.group.group_id, c.lang, c.pid, c.rank);
        }
    }
    Ok(())
}
