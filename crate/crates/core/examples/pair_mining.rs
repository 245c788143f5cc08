//! Grouping questions across languages: translation pair files and pairs
//! mined by embedding cosine similarity.
//!
//! $ cargo run --example pair_mining

use xorqa::embedding::EmbeddingMatrix;
use xorqa::model::{LanguageCode, Question};
use xorqa::pairing::{cosine_similarity, ingest_translation_pairs, mine_pairs, PairingSide};

fn question(qid: &str, lang: &str, text: &str) -> xorqa::Result<Question> {
    Ok(Question {
        qid: qid.into(),
        lang: LanguageCode::new(lang)?,
        text: text.into(),
        gold_answers: vec![],
        group_id: None,
    })
}

fn main() -> xorqa::Result<()> {
    let ko = vec![
        question("ko-1", "ko", "애플은 언제 설립되었나요")?,
        question("ko-2", "ko", "시리는 언제 출시되었나요")?,
    ];
    let en = vec![
        question("en-1", "en", "when was apple founded")?,
        question("en-2", "en", "when was siri introduced")?,
        question("en-3", "en", "what is the capital of finland")?,
    ];
    let vectors = EmbeddingMatrix::from_rows(
        4,
        [
            ("ko-1", vec![1.0f32, 0.0, 0.0, 0.0]),
            ("ko-2", vec![0.0, 1.0, 0.0, 0.0]),
            ("en-1", vec![7.0, 7.0, 1.0, 1.0]), // cosine with ko-1 is exactly 0.7
            ("en-2", vec![0.2, 1.0, 0.1, 0.0]),
            ("en-3", vec![0.0, 0.0, 0.0, 1.0]),
        ],
    )?;

    println!(
        "cos(ko-1, en-1) = {}",
        cosine_similarity(vectors.get("ko-1").unwrap(), vectors.get("en-1").unwrap())?
    );
    for threshold in [0.7, 0.69] {
        let groups = mine_pairs(
            PairingSide::new(&ko, &vectors),
            PairingSide::new(&en, &vectors),
            threshold,
        )?;
        let ids: Vec<&str> = groups.iter().map(|g| g.group_id.as_str()).collect();
        println!("threshold {threshold}: {ids:?}");
    }

    let dir = std::env::temp_dir().join("xorqa-pairing-example");
    std::fs::create_dir_all(&dir).map_err(|e| xorqa::Error::Io { path: dir.clone(), source: e })?;
    let pairs = dir.join("pairs.jsonl");
    std::fs::write(
        &pairs,
        concat!(
            r#"{"group_id":"t1","members":[{"qid":"ko-1","lang":"ko","provenance":"translation"},{"qid":"en-1","lang":"en","provenance":"translation"}]}"#,
            "\n",
            r#"{"group_id":"t2","members":[{"qid":"ko-2","lang":"ko","provenance":"translation"},{"qid":"en-2","lang":"ko","provenance":"translation"}]}"#,
            "\n",
        ),
    )
    .map_err(|e| xorqa::Error::Io { path: pairs.clone(), source: e })?;
    println!("ingest: {}", ingest_translation_pairs(&pairs).unwrap_err());

    // Same file with the language typo fixed.
    let fixed = std::fs::read_to_string(&pairs).unwrap().replace(r#""en-2","lang":"ko""#, r#""en-2","lang":"en""#);
    std::fs::write(&pairs, fixed).map_err(|e| xorqa::Error::Io { path: pairs.clone(), source: e })?;
    for g in ingest_translation_pairs(&pairs)? {
        let qids: Vec<&str> = g.members().iter().map(|m| m.qid.as_str()).collect();
        println!("  {} {qids:?}", g.group_id);
    }
    Ok(())
}
