use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::table::{ItemId, RatingTable, UserId};
use crate::error::Result;

pub const NUM_FOLDS: usize = 5;

/// Users need at least this many ratings to receive a test set.
pub const MIN_RATINGS_FOR_TEST: usize = NUM_FOLDS;

#[derive(Debug, Clone)]
pub struct FoldSplit {
    pub fold: usize,
    pub train: RatingTable,
    pub test: RatingTable,
    pub seed: u64,
    /// Users whose profiles were too short to split; all their ratings sit in
    /// `train` for every fold and they never issue queries.
    pub train_only_users: Vec<UserId>,
}

/// Five-fold cross-validation, stratified per user.
///
/// Each user's ratings are shuffled and dealt round-robin across the folds,
/// with the dealing position carried over from one user to the next. Every
/// fold therefore holds `floor` or `ceil` of 20% of each user's ratings and of
/// the global total.
pub fn split_folds(table: &RatingTable, seed: u64) -> Result<Vec<FoldSplit>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment: Vec<Vec<(UserId, ItemId, f64, Option<usize>)>> = Vec::new();
    let mut train_only = Vec::new();
    let mut cursor = 0usize;

    for u in table.users() {
        let profile = table.profile(u);
        if profile.is_empty() {
            continue;
        }
        if profile.len() < MIN_RATINGS_FOR_TEST {
            train_only.push(u);
            assignment.push(profile.iter().map(|&(i, r)| (u, i, r, None)).collect());
            continue;
        }
        let mut order: Vec<usize> = (0..profile.len()).collect();
        order.shuffle(&mut rng);
        let rows = order
            .iter()
            .enumerate()
            .map(|(pos, &idx)| {
                let (i, r) = profile[idx];
                (u, i, r, Some((cursor + pos) % NUM_FOLDS))
            })
            .collect();
        cursor = (cursor + profile.len()) % NUM_FOLDS;
        assignment.push(rows);
    }
    if !train_only.is_empty() {
        log::warn!(
            "{} users have fewer than {MIN_RATINGS_FOR_TEST} ratings and stay in train for every fold",
            train_only.len()
        );
    }

    (0..NUM_FOLDS)
        .map(|fold| {
            let rows = assignment.iter().flatten();
            let train = rows
                .clone()
                .filter(|r| r.3 != Some(fold))
                .map(|&(u, i, r, _)| (u, i, r));
            let test = rows
                .filter(|r| r.3 == Some(fold))
                .map(|&(u, i, r, _)| (u, i, r));
            Ok(FoldSplit {
                fold,
                train: RatingTable::from_triples(table.catalog().clone(), table.scale().clone(), train)?,
                test: RatingTable::from_triples(table.catalog().clone(), table.scale().clone(), test)?,
                seed,
                train_only_users: train_only.clone(),
            })
        })
        .collect()
}
