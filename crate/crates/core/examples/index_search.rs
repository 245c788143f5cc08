//! Exact top-k inner-product search over random passage vectors.
//!
//! $ cargo run --release --example index_search

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xorqa::embedding::EmbeddingMatrix;
use xorqa::index::FlatIndex;

fn random(rng: &mut ChaCha8Rng, prefix: &str, n: usize, dim: usize) -> xorqa::Result<EmbeddingMatrix> {
    let mut m = EmbeddingMatrix::new(dim)?;
    for i in 0..n {
        let v: Vec<f32> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        m.push(format!("{prefix}{i}"), &v)?;
    }
    Ok(m)
}

fn main() -> xorqa::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let index = FlatIndex::build(random(&mut rng, "p", 2000, 768)?)?;
    let queries = random(&mut rng, "q", 8, 768)?;

    let start = std::time::Instant::now();
    let results = index.batch_search(&queries, 5)?;
    println!("8 queries against {} passages in {:?}", index.len(), start.elapsed());

    for hit in results[0].hits() {
        println!("  {}  rank {}  score {:.4}", hit.pid, hit.rank, hit.score);
    }

    // Same answer whatever the pool size.
    assert_eq!(index.batch_search_with_workers(&queries, 5, 1)?, results);

    // Equal scores come back in pid order.
    let tied = FlatIndex::build(EmbeddingMatrix::from_rows(
        2,
        [("b", vec![1.0f32, 0.0]), ("a", vec![1.0, 0.0]), ("c", vec![0.0, 1.0])],
    )?)?;
    let pids: Vec<String> = tied.search_topk(&[1.0, 0.0], 2)?.into_iter().map(|h| h.pid).collect();
    println!("tie order: {pids:?}");
    Ok(())
}
