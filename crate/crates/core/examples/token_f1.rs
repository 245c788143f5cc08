//! Answer normalization, token F1 and exact match.
//!
//! $ cargo run --example token_f1

use xorqa::metrics::{exact_match, normalize_and_tokenize, token_f1, Segmenter, Tokenizer};
use xorqa::model::LanguageCode;

/// Toy word segmenter: cuts Chinese text into two-character words.
struct Bigrams;

impl Segmenter for Bigrams {
    fn segment(&self, normalized: &str, _lang: &LanguageCode) -> Vec<String> {
        let chars: Vec<char> = normalized.chars().filter(|c| !c.is_whitespace()).collect();
        chars.chunks(2).map(|w| w.iter().collect()).collect()
    }
}

fn main() -> xorqa::Result<()> {
    let en = LanguageCode::new("en")?;
    let ja = LanguageCode::new("ja")?;

    let cases: [(&str, &[&str], &LanguageCode); 5] = [
        ("the legal drinking age is 21", &["21"], &en),
        ("Everest", &["Mount Everest", "Everest"], &en),
        ("Graham Bell!", &["Alexander Graham Bell"], &en),
        ("東京都", &["東京"], &ja),
        ("", &[""], &en),
    ];
    for (pred, golds, lang) in cases {
        println!(
            "{pred:>30?} vs {golds:?}: f1 {:.4} em {}",
            token_f1(pred, golds, lang),
            exact_match(pred, golds, lang)
        );
    }

    println!("tokens: {:?}", normalize_and_tokenize("«Ünïcode», U.S.A. パリ市", &en));

    let zh = LanguageCode::new("zh")?;
    let words = Tokenizer::new(Bigrams);
    println!("default: {:?}", normalize_and_tokenize("北京大学", &zh));
    println!("bigrams: {:?}", words.tokenize("北京大学", &zh));
    println!(
        "f1 vs 北大: default {:.4}, bigrams {:.4}",
        token_f1("北京大学", &["北大"], &zh),
        words.token_f1("北京大学", &["北大"], &zh)
    );
    Ok(())
}
