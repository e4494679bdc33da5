use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{ItemId, RatingTable, UserId};
use crate::error::Result;

pub const NUM_SUBSETS: usize = 5;

/// One round of the embedding evaluation protocol: a held-out subset split
/// in half into validation and test, the other four subsets train.
#[derive(Debug, Clone)]
pub struct EmbeddingEvalSplit {
    pub round: usize,
    pub train: RatingTable,
    pub validation: RatingTable,
    pub test: RatingTable,
}

/// Shuffles the ratings into five near-equal subsets and returns the five
/// rounds.
pub fn embedding_eval_splits(table: &RatingTable, seed: u64) -> Result<Vec<EmbeddingEvalSplit>> {
    let mut all: Vec<(UserId, ItemId, f64)> = table.ratings().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    all.shuffle(&mut rng);
    let n = all.len();
    let bounds: Vec<usize> = (0..=NUM_SUBSETS).map(|s| s * n / NUM_SUBSETS).collect();
    let catalog = Arc::clone(table.catalog());
    let scale = table.scale().clone();
    let build = |rows: Vec<(UserId, ItemId, f64)>| RatingTable::from_triples(Arc::clone(&catalog), scale.clone(), rows);
    (0..NUM_SUBSETS)
        .map(|round| {
            let (lo, hi) = (bounds[round], bounds[round + 1]);
            let mid = lo + (hi - lo) / 2;
            let train = all[..lo].iter().chain(&all[hi..]).copied().collect();
            Ok(EmbeddingEvalSplit {
                round,
                train: build(train)?,
                validation: build(all[lo..mid].to_vec())?,
                test: build(all[mid..hi].to_vec())?,
            })
        })
        .collect()
}
