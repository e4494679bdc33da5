use std::collections::BTreeMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::dataset::{ItemId, RatingTable, UserId};
use crate::error::{Error, Result};
use crate::knn::Prediction;

/// One processed query of a target's stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub target: UserId,
    /// 1-based position in the target's stream.
    pub q: usize,
    pub item: ItemId,
    pub prediction: f64,
    pub truth: f64,
    pub neighbors: Vec<UserId>,
    pub perturbed: Vec<bool>,
    /// |N_u^(q)| after this query.
    pub cumulative_neighbors: usize,
}

/// Every processed (target, test item) pair of one experiment cell, grouped
/// by target in stream order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QueryTrace {
    entries: Vec<TraceEntry>,
    by_user: BTreeMap<UserId, Range<usize>>,
}

impl QueryTrace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a target's whole stream. Truths are looked up in `test`.
    pub fn push_stream(&mut self, target: UserId, predictions: &[Prediction], test: &RatingTable) -> Result<()> {
        if self.by_user.contains_key(&target) {
            return Err(Error::InvalidArgument(format!("stream of {target} already traced")));
        }
        let start = self.entries.len();
        let mut seen = BTreeMap::new();
        for (n, p) in predictions.iter().enumerate() {
            if p.target != target {
                return Err(Error::InvalidArgument(format!("prediction for {} in {target}'s stream", p.target)));
            }
            let truth = test
                .rating(target, p.item)
                .ok_or_else(|| Error::InvalidArgument(format!("{target} has no test rating for {}", p.item)))?;
            for nb in &p.neighbors {
                seen.insert(nb.user, ());
            }
            self.entries.push(TraceEntry {
                target,
                q: n + 1,
                item: p.item,
                prediction: p.score,
                truth,
                neighbors: p.neighbors.iter().map(|nb| nb.user).collect(),
                perturbed: p.neighbors.iter().map(|nb| nb.perturbed).collect(),
                cumulative_neighbors: seen.len(),
            });
        }
        self.by_user.insert(target, start..self.entries.len());
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[TraceEntry] {
        &self.entries
    }

    pub fn users(&self) -> impl Iterator<Item = UserId> + '_ {
        self.by_user.keys().copied()
    }

    /// The user's entries in stream order (empty when untraced).
    pub fn stream(&self, user: UserId) -> &[TraceEntry] {
        self.by_user.get(&user).map_or(&[], |r| &self.entries[r.clone()])
    }

    /// Number of queries processed for `user`.
    pub fn processed(&self, user: UserId) -> usize {
        self.stream(user).len()
    }

    /// Longest stream in the trace.
    pub fn max_q(&self) -> usize {
        self.by_user.values().map(|r| r.len()).max().unwrap_or(0)
    }
}
