use std::collections::BTreeMap;

/// `rank(x) = |{y : f(y) <= f(x), y != x}|` for every entry.
///
/// Equal scores share a rank; higher scores get strictly higher ranks, and
/// ranks lie in `0..len`.
pub fn rank_values(values: &[f64]) -> Vec<u32> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    values
        .iter()
        .map(|v| (sorted.partition_point(|s| s.total_cmp(v).is_le()) - 1) as u32)
        .collect()
}

/// Map form of [`rank_values`].
pub fn rank_scores<K: Ord + Clone>(scores: &BTreeMap<K, f64>) -> BTreeMap<K, u32> {
    let values: Vec<f64> = scores.values().copied().collect();
    scores.keys().cloned().zip(rank_values(&values)).collect()
}

/// Ranks over a population from which one member (the target user) is
/// removed. The excluded slot gets rank 0 and is never consulted.
pub fn population_ranks(values: &[f64], excluded: usize) -> Vec<u32> {
    let mut sorted: Vec<f64> = values
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != excluded)
        .map(|(_, &v)| v)
        .collect();
    sorted.sort_by(f64::total_cmp);
    values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            if i == excluded {
                0
            } else {
                (sorted.partition_point(|s| s.total_cmp(v).is_le()) - 1) as u32
            }
        })
        .collect()
}
