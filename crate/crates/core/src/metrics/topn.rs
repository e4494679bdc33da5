use std::cmp::Ordering;

use super::trace::QueryTrace;
use crate::dataset::{ItemId, UserId};

pub const TOP_N: usize = 10;

/// The `n` queried items with the highest estimates, ties by ascending item.
pub fn top_n(trace: &QueryTrace, user: UserId, n: usize) -> Vec<ItemId> {
    let mut scored: Vec<(ItemId, f64)> = trace.stream(user).iter().map(|e| (e.item, e.prediction)).collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0)));
    scored.truncate(n);
    scored.into_iter().map(|(i, _)| i).collect()
}

/// nDCG@10 with binary relevance `truth > relevance_threshold`. `None` when
/// none of the user's queried items is relevant.
pub fn ndcg_at_10(trace: &QueryTrace, user: UserId, relevance_threshold: f64) -> Option<f64> {
    ndcg_at_n(trace, user, relevance_threshold, TOP_N)
}

pub fn ndcg_at_n(trace: &QueryTrace, user: UserId, relevance_threshold: f64, n: usize) -> Option<f64> {
    let stream = trace.stream(user);
    let relevant = |item: ItemId| {
        stream
            .iter()
            .find(|e| e.item == item)
            .is_some_and(|e| e.truth > relevance_threshold)
    };
    let total_relevant = stream.iter().filter(|e| e.truth > relevance_threshold).count();
    if total_relevant == 0 {
        return None;
    }
    let discount = |rank: usize| 1.0 / ((rank + 1) as f64).log2();
    let dcg: f64 = top_n(trace, user, n)
        .into_iter()
        .enumerate()
        .filter(|&(_, i)| relevant(i))
        .map(|(r, _)| discount(r + 1))
        .sum();
    let idcg: f64 = (1..=total_relevant.min(n)).map(discount).sum();
    Some(dcg / idcg)
}
