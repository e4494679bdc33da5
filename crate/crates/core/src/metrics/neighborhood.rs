use std::collections::BTreeSet;

use super::trace::QueryTrace;
use crate::dataset::{RatingTable, UserId};
use crate::error::{Error, Result};

fn check_q(trace: &QueryTrace, user: UserId, q: usize) -> Result<()> {
    let processed = trace.processed(user);
    if q == 0 || q > processed {
        return Err(Error::QueryOutOfRange {
            user: user.to_string(),
            requested: q,
            processed,
        });
    }
    Ok(())
}

/// Neighbors@q(u) = |N_u^(q)|.
pub fn neighbors_at_q(trace: &QueryTrace, user: UserId, q: usize) -> Result<usize> {
    check_q(trace, user, q)?;
    Ok(trace.stream(user)[q - 1].cumulative_neighbors)
}

/// Neighbors@q for q = 1..=processed.
pub fn neighbors_curve(trace: &QueryTrace, user: UserId) -> Vec<usize> {
    trace.stream(user).iter().map(|e| e.cumulative_neighbors).collect()
}

/// |I_u ∩ I_n| over the training profiles.
pub fn corated(train: &RatingTable, u: UserId, n: UserId) -> usize {
    let (a, b) = (train.profile(u), train.profile(n));
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

/// CoRatings@q(u): mean co-rating count between `user` and the members of
/// N_u^(q); 0 when the neighborhood is empty.
pub fn coratings_at_q(trace: &QueryTrace, train: &RatingTable, user: UserId, q: usize) -> Result<f64> {
    check_q(trace, user, q)?;
    let members: BTreeSet<UserId> = trace.stream(user)[..q]
        .iter()
        .flat_map(|e| e.neighbors.iter().copied())
        .collect();
    if members.is_empty() {
        return Ok(0.0);
    }
    let total: usize = members.iter().map(|&n| corated(train, user, n)).sum();
    Ok(total as f64 / members.len() as f64)
}

/// CoRatings@q for q = 1..=processed, computed incrementally.
pub fn coratings_curve(trace: &QueryTrace, train: &RatingTable, user: UserId) -> Vec<f64> {
    let mut members = BTreeSet::new();
    let mut total = 0usize;
    trace
        .stream(user)
        .iter()
        .map(|e| {
            for &n in &e.neighbors {
                if members.insert(n) {
                    total += corated(train, user, n);
                }
            }
            if members.is_empty() {
                0.0
            } else {
                total as f64 / members.len() as f64
            }
        })
        .collect()
}
