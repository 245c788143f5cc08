//! Writing and reading the little-endian `XEMB` embedding file.
//!
//! $ cargo run --example embedding_file

use xorqa::embedding::EmbeddingMatrix;

fn main() -> xorqa::Result<()> {
    let m = EmbeddingMatrix::from_rows(
        3,
        [
            ("q-en-1", vec![0.1f32, 0.2, 0.3]),
            ("q-ko-1", vec![-1.0, 0.0, 2.5]),
            ("質問-ja", vec![0.0, 0.0, 1.0]),
        ],
    )?;

    let bytes = m.to_bytes();
    println!("{} rows x {} dims -> {} bytes", m.len(), m.dim(), bytes.len());
    println!("header: {:02x?}", &bytes[..20]);

    let back = EmbeddingMatrix::from_bytes(&bytes)?;
    assert_eq!(back, m);
    println!("ids after round trip: {:?}", back.ids());

    let dir = std::env::temp_dir().join("xorqa-embedding-example");
    std::fs::create_dir_all(&dir).map_err(|e| xorqa::Error::Io { path: dir.clone(), source: e })?;
    let path = dir.join("questions.xemb");
    m.write(&path)?;
    println!("row of 質問-ja from disk: {:?}", EmbeddingMatrix::read(&path)?.get("質問-ja"));

    // Corruption is reported with the byte offset.
    let mut broken = bytes.clone();
    broken.truncate(bytes.len() - 2);
    println!("truncated: {}", EmbeddingMatrix::from_bytes(&broken).unwrap_err());
    broken = bytes;
    broken[0] = b'Y';
    println!("bad magic: {}", EmbeddingMatrix::from_bytes(&broken).unwrap_err());
    Ok(())
}
