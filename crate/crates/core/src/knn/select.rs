use std::cmp::Ordering;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::state::NeighborhoodState;
use super::strategy::{Strategy, StrategySpec};
use crate::dataset::UserId;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub user: UserId,
    pub similarity: f64,
}

/// Per-target scores that neighbor selection reads.
#[derive(Debug, Clone, Copy)]
pub struct SelectionInputs<'a> {
    /// Similarity of the target to every user.
    pub similarities: &'a [f64],
    /// Population ranks of `similarities`; required by rank-combined
    /// strategies.
    pub similarity_ranks: Option<&'a [u32]>,
    /// Population ranks of the strategy's reusability score.
    pub reuse_ranks: Option<&'a [u32]>,
}

fn by_similarity(sims: &[f64]) -> impl Fn(&UserId, &UserId) -> Ordering + '_ {
    move |a, b| {
        sims[b.index()]
            .total_cmp(&sims[a.index()])
            .then_with(|| a.cmp(b))
    }
}

/// Chooses at most `k` neighbors for `(target, item)` among `raters`.
///
/// `raters` is U_i in ascending user order; the target is never a candidate.
/// An empty result means nobody else rated the item.
pub fn select_neighbors<R: RngCore + ?Sized>(
    target: UserId,
    raters: &[UserId],
    spec: &StrategySpec,
    state: &NeighborhoodState,
    inputs: SelectionInputs<'_>,
    rng: &mut R,
) -> Result<Vec<Candidate>> {
    let sims = inputs.similarities;
    let mut pool: Vec<UserId> = raters.iter().copied().filter(|&c| c != target).collect();
    let k = spec.k;

    let chosen: Vec<UserId> = match spec.strategy {
        Strategy::UserKnn | Strategy::NeuKnn => {
            pool.sort_by(by_similarity(sims));
            pool.truncate(k);
            pool
        }
        Strategy::UserKnnReuse => {
            let (mut prev, mut fresh): (Vec<UserId>, Vec<UserId>) =
                pool.into_iter().partition(|&c| state.contains(c));
            prev.sort_by(by_similarity(sims));
            prev.truncate(k);
            fresh.sort_by(by_similarity(sims));
            fresh.truncate(k - prev.len());
            prev.extend(fresh);
            prev
        }
        Strategy::Expect | Strategy::Gain | Strategy::NeuKnnReuse => {
            let sim_ranks = inputs.similarity_ranks.ok_or_else(|| {
                Error::InvalidArgument(format!("{} needs similarity ranks", spec.strategy))
            })?;
            let reuse_ranks = inputs.reuse_ranks.ok_or_else(|| {
                Error::InvalidArgument(format!("{} needs reusability ranks", spec.strategy))
            })?;
            // random keys order candidates that tie on the combined rank
            let mut keyed: Vec<(u64, u64, UserId)> = pool
                .into_iter()
                .map(|c| {
                    let combined = sim_ranks[c.index()] as u64 + reuse_ranks[c.index()] as u64;
                    (combined, rng.next_u64(), c)
                })
                .collect();
            keyed.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
            keyed.truncate(k);
            keyed.into_iter().map(|(_, _, c)| c).collect()
        }
    };

    Ok(chosen
        .into_iter()
        .map(|user| Candidate {
            user,
            similarity: sims[user.index()],
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::knn::ranking::population_ranks;

    fn users(ids: &[u32]) -> Vec<UserId> {
        ids.iter().map(|&i| UserId(i)).collect()
    }

    #[test]
    fn userknn_takes_top_similarity() {
        // target 0; b=1 (0.9), c=2 (0.8), d=3 (0.1)
        let sims = [1.0, 0.9, 0.8, 0.1];
        let state = NeighborhoodState::new(UserId(0), 4);
        let spec = StrategySpec::new(Strategy::UserKnn, 2);
        let inputs = SelectionInputs {
            similarities: &sims,
            similarity_ranks: None,
            reuse_ranks: None,
        };
        let got = select_neighbors(UserId(0), &users(&[0, 1, 2, 3]), &spec, &state, inputs, &mut ChaCha8Rng::seed_from_u64(0))
            .unwrap();
        assert_eq!(got.iter().map(|c| c.user).collect::<Vec<_>>(), users(&[1, 2]));
    }

    #[test]
    fn similarity_ties_break_by_id() {
        let sims = [0.0, 0.5, 0.5, 0.5];
        let state = NeighborhoodState::new(UserId(0), 4);
        let spec = StrategySpec::new(Strategy::UserKnn, 2);
        let inputs = SelectionInputs {
            similarities: &sims,
            similarity_ranks: None,
            reuse_ranks: None,
        };
        let got = select_neighbors(UserId(0), &users(&[3, 2, 1]), &spec, &state, inputs, &mut ChaCha8Rng::seed_from_u64(0))
            .unwrap();
        assert_eq!(got.iter().map(|c| c.user).collect::<Vec<_>>(), users(&[1, 2]));
    }

    #[test]
    fn reuse_prefers_previous_then_fills() {
        let sims = [1.0, 0.9, 0.8, 0.3, 0.2];
        let mut state = NeighborhoodState::new(UserId(0), 5);
        state.record(crate::dataset::ItemId(9), users(&[3]));
        let spec = StrategySpec::new(Strategy::UserKnnReuse, 2);
        let inputs = SelectionInputs {
            similarities: &sims,
            similarity_ranks: None,
            reuse_ranks: None,
        };
        let got = select_neighbors(UserId(0), &users(&[1, 2, 3, 4]), &spec, &state, inputs, &mut ChaCha8Rng::seed_from_u64(0))
            .unwrap();
        assert_eq!(got.iter().map(|c| c.user).collect::<Vec<_>>(), users(&[3, 1]));
    }

    #[test]
    fn reusability_rank_overrides_similarity() {
        // Population: target, Bob, Amy, Tim, and three users who rated other
        // items. Tim trails on similarity but leads on reusability.
        let names = ["target", "Bob", "Amy", "Tim", "x1", "x2", "x3"];
        let sims = [1.0, 0.98, 0.97, 0.90, 0.5, 0.4, 0.3];
        let reuse = [0.0, 1.2, 0.74, 5.15, 2.0, 3.0, 4.0];
        let sim_ranks = population_ranks(&sims, 0);
        let reuse_ranks = population_ranks(&reuse, 0);
        let state = NeighborhoodState::new(UserId(0), names.len());
        let spec = StrategySpec::new(Strategy::Expect, 1);
        let inputs = SelectionInputs {
            similarities: &sims,
            similarity_ranks: Some(&sim_ranks),
            reuse_ranks: Some(&reuse_ranks),
        };
        let got = select_neighbors(UserId(0), &users(&[1, 2, 3]), &spec, &state, inputs, &mut ChaCha8Rng::seed_from_u64(0))
            .unwrap();
        assert_eq!(names[got[0].user.index()], "Tim");
        assert_eq!(got[0].similarity, 0.90);
    }

    #[test]
    fn combined_without_ranks_errors() {
        let sims = [1.0, 0.5];
        let state = NeighborhoodState::new(UserId(0), 2);
        let inputs = SelectionInputs {
            similarities: &sims,
            similarity_ranks: None,
            reuse_ranks: None,
        };
        let spec = StrategySpec::new(Strategy::Gain, 1);
        assert!(select_neighbors(UserId(0), &users(&[1]), &spec, &state, inputs, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn no_candidates_yields_empty() {
        let sims = [1.0];
        let state = NeighborhoodState::new(UserId(0), 1);
        let inputs = SelectionInputs {
            similarities: &sims,
            similarity_ranks: None,
            reuse_ranks: None,
        };
        let spec = StrategySpec::new(Strategy::UserKnn, 3);
        assert!(select_neighbors(UserId(0), &users(&[0]), &spec, &state, inputs, &mut ChaCha8Rng::seed_from_u64(0))
            .unwrap()
            .is_empty());
    }
}
