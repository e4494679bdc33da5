use std::sync::Arc;

use super::model::{embed_sim, EmbeddingModel};
use crate::dataset::{ItemId, UserId};
use crate::knn::{ItemSimilarity, NeighborhoodState, UserSimilarity};

/// Cosine between user embeddings.
#[derive(Debug, Clone)]
pub struct UserEmbeddingSimilarity(pub Arc<EmbeddingModel>);

impl UserSimilarity for UserEmbeddingSimilarity {
    fn num_users(&self) -> usize {
        self.0.num_users()
    }

    fn similarity_row(&self, target: UserId) -> Vec<f64> {
        let p = self.0.user_embedding(target);
        (0..self.0.num_users())
            .map(|v| embed_sim(p, self.0.user_embedding(UserId(v as u32))))
            .collect()
    }
}

/// Cosine between item embeddings.
#[derive(Debug, Clone)]
pub struct ItemEmbeddingSimilarity(pub Arc<EmbeddingModel>);

impl ItemSimilarity for ItemEmbeddingSimilarity {
    fn item_similarity(&self, a: ItemId, b: ItemId) -> f64 {
        embed_sim(self.0.item_embedding(a), self.0.item_embedding(b))
    }
}

/// Sum of `sim(item, j)` over earlier queries `j` that `candidate` served.
pub fn neuknn_reusability(
    candidate: UserId,
    state: &NeighborhoodState,
    item: ItemId,
    item_sim: &dyn ItemSimilarity,
) -> f64 {
    state
        .queries()
        .iter()
        .filter(|(_, ns)| ns.contains(&candidate))
        .map(|&(j, _)| item_sim.item_similarity(item, j))
        .sum()
}

/// [`neuknn_reusability`] for every user at once, indexed by user.
pub fn neuknn_reusability_row(state: &NeighborhoodState, item: ItemId, item_sim: &dyn ItemSimilarity) -> Vec<f64> {
    let mut row = vec![0.0; state.num_users()];
    for (j, ns) in state.queries() {
        let s = item_sim.item_similarity(item, *j);
        for n in ns {
            row[n.index()] += s;
        }
    }
    row
}
