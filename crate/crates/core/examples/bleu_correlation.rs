//! Sentence BLEU between machine translations and mined counterparts, and
//! its Pearson correlation with cosine similarity.
//!
//! $ cargo run --example bleu_correlation

use xorqa::model::LanguageCode;
use xorqa::pairing::{pearson_correlation, sentence_bleu};

fn main() -> xorqa::Result<()> {
    let en = LanguageCode::new("en")?;
    let s = sentence_bleu("when was apple formed", "when was siri introduced by apple", &en);
    println!("BLEU = {:.6}", s.score);
    println!("identical: {}", sentence_bleu("who wrote hamlet", "who wrote hamlet", &en).score);
    println!("disjoint: {}", sentence_bleu("x y z", "a b c", &en).score);
    println!("empty flagged: {}", sentence_bleu("", "a b", &en).empty_input);

    // (cosine of the mined pair, BLEU of the translation against it)
    let pairs = [
        (0.93, "what is the capital of france", "what is the capital of france"),
        (0.88, "who wrote the novel war and peace", "who wrote war and peace"),
        (0.81, "when did the war end", "when did world war two end"),
        (0.74, "how tall is mount everest", "where is mount everest"),
        (0.72, "who invented the telephone", "what is a telephone"),
    ];
    let cosines: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let bleus: Vec<f64> = pairs.iter().map(|p| sentence_bleu(p.1, p.2, &en).score).collect();
    for ((c, b), p) in cosines.iter().zip(&bleus).zip(&pairs) {
        println!("  cos {c:.2}  bleu {b:.4}  {:?}", p.1);
    }
    println!("pearson r = {:.4}", pearson_correlation(&cosines, &bleus)?);
    Ok(())
}
