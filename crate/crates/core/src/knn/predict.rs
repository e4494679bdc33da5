use serde::{Deserialize, Serialize};

use crate::dataset::{ItemId, UserId};

/// One neighbor's contribution to an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServedNeighbor {
    pub user: UserId,
    pub similarity: f64,
    /// Value that entered the weighted average (real or randomized).
    pub served: f64,
    /// Served through the randomized-response mechanism.
    pub protected: bool,
    /// Replaced by a random rating.
    pub perturbed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub target: UserId,
    pub item: ItemId,
    pub score: f64,
    pub neighbors: Vec<ServedNeighbor>,
    /// No usable neighbor weight: `score` is the fallback mean.
    pub fallback: bool,
}

/// Similarity-weighted mean of served ratings.
///
/// Negative similarities carry zero weight. Terms are summed in ascending
/// user order, so the estimate does not depend on selection order. With no
/// neighbors or zero total weight the estimate is `fallback_score`.
pub fn predict(target: UserId, item: ItemId, neighbors: Vec<ServedNeighbor>, fallback_score: f64) -> Prediction {
    let mut order: Vec<usize> = (0..neighbors.len()).collect();
    order.sort_by_key(|&n| neighbors[n].user);
    let (mut num, mut den) = (0.0, 0.0);
    for &n in &order {
        let w = neighbors[n].similarity.max(0.0);
        num += w * neighbors[n].served;
        den += w;
    }
    let (score, fallback) = if den > 0.0 {
        (num / den, false)
    } else {
        (fallback_score, true)
    };
    Prediction {
        target,
        item,
        score,
        neighbors,
        fallback,
    }
}
