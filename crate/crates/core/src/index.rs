//! Exact maximum-inner-product search over a flat embedding matrix.
//!
//! Scores are `f32` products accumulated in `f64` strictly left to right,
//! so every run, sequential or parallel, produces bit-identical scores.
//! Ties are broken by ascending pid.

use std::cmp::Ordering;
use std::path::Path;

use rayon::prelude::*;

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::model::{Hit, RetrievalResult};

/// Inner product with a fixed left-to-right `f64` accumulation order.
#[inline]
pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    let mut acc = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        acc += f64::from(*x) * f64::from(*y);
    }
    acc
}

/// Immutable passage index. Cheap to share across threads by reference.
#[derive(Clone, Debug)]
pub struct FlatIndex {
    passages: EmbeddingMatrix,
}

impl FlatIndex {
    pub fn build(passages: EmbeddingMatrix) -> Result<Self> {
        if passages.is_empty() {
            return Err(Error::EmptyIndex);
        }
        Ok(Self { passages })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::build(EmbeddingMatrix::read(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.passages.write(path)
    }

    pub fn dim(&self) -> usize {
        self.passages.dim()
    }

    pub fn len(&self) -> usize {
        self.passages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passages.is_empty()
    }

    pub fn embeddings(&self) -> &EmbeddingMatrix {
        &self.passages
    }

    /// The `min(k, len)` highest-scoring passages, best first.
    pub fn search_topk(&self, query: &[f32], k: usize) -> Result<Vec<Hit>> {
        if query.len() != self.dim() {
            return Err(Error::DimMismatch {
                expected: self.dim(),
                found: query.len(),
            });
        }
        if k == 0 {
            return Err(Error::InvalidK);
        }
        let ids = self.passages.ids();
        let mut scored: Vec<(f64, usize)> = self
            .passages
            .rows()
            .enumerate()
            .map(|(i, (_, v))| (dot(query, v), i))
            .collect();
        let by_rank = |a: &(f64, usize), b: &(f64, usize)| -> Ordering {
            b.0.total_cmp(&a.0).then_with(|| ids[a.1].cmp(&ids[b.1]))
        };
        let k = k.min(scored.len());
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, by_rank);
            scored.truncate(k);
        }
        scored.sort_unstable_by(by_rank);
        Ok(scored
            .into_iter()
            .enumerate()
            .map(|(r, (score, i))| Hit {
                pid: ids[i].clone(),
                score,
                rank: r as u32 + 1,
            })
            .collect())
    }

    pub fn search(&self, qid: &str, query: &[f32], k: usize) -> Result<RetrievalResult> {
        RetrievalResult::new(qid, self.search_topk(query, k)?)
    }

    /// One result per query row, in query order, on the global thread pool.
    pub fn batch_search(&self, queries: &EmbeddingMatrix, k: usize) -> Result<Vec<RetrievalResult>> {
        self.check_batch(queries, k)?;
        queries
            .rows()
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|(qid, v)| self.search(qid, v, k))
            .collect()
    }

    /// As [`batch_search`](Self::batch_search) on a dedicated pool of
    /// `workers` threads. Output does not depend on `workers`.
    pub fn batch_search_with_workers(
        &self,
        queries: &EmbeddingMatrix,
        k: usize,
        workers: usize,
    ) -> Result<Vec<RetrievalResult>> {
        self.check_batch(queries, k)?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| self.batch_search(queries, k))
    }

    fn check_batch(&self, queries: &EmbeddingMatrix, k: usize) -> Result<()> {
        if queries.dim() != self.dim() {
            return Err(Error::DimMismatch {
                expected: self.dim(),
                found: queries.dim(),
            });
        }
        if k == 0 {
            return Err(Error::InvalidK);
        }
        Ok(())
    }
}
