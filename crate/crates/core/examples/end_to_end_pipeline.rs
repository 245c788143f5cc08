//! Embeddings in, report files out: index the passages, search every
//! question, select contexts, score answers and write the bundle.
//!
//! $ cargo run --release --example end_to_end_pipeline [out_dir]

use std::path::PathBuf;

use xorqa::analysis::Setting;
use xorqa::report::{run_pipeline, PipelineConfig};

fn main() -> xorqa::Result<()> {
    let fixture = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/protocol");
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("xorqa-pipeline-example"));

    // Paths inside the file are relative to it.
    let mut config = PipelineConfig::load(fixture.join("pipeline.toml"))?;

    for (mode, sub) in [(Setting::Oracle, "oracle"), (Setting::NonOracle, "non-oracle")] {
        config.mode = mode;
        config.k = Some(mode.default_top_k());
        config.out_dir = out.join(sub);
        let bundle = run_pipeline(&config)?;
        bundle.write(&config.out_dir)?;
        for w in &bundle.warnings {
            eprintln!("warning: {w}");
        }
        println!("--- {mode:?}\n{}", bundle.summary());
    }

    let dir = out.join("oracle");
    println!("files in {}:", dir.display());
    let mut names: Vec<String> = std::fs::read_dir(&dir)
        .map_err(|e| xorqa::Error::Io { path: dir.clone(), source: e })?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    for n in names {
        println!("  {n}");
    }
    Ok(())
}
