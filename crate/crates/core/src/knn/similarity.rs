use std::sync::Arc;

use crate::dataset::{ItemId, RatingTable, UserId};

/// Source of target-to-everyone user similarities.
pub trait UserSimilarity: Send + Sync {
    fn num_users(&self) -> usize;

    /// Similarity of `target` to every user, indexed by user.
    fn similarity_row(&self, target: UserId) -> Vec<f64>;
}

/// Item-to-item similarity, used by the time-dependent reusability.
pub trait ItemSimilarity: Send + Sync {
    fn item_similarity(&self, a: ItemId, b: ItemId) -> f64;
}

/// Cosine similarity over training profiles (missing ratings count as 0).
#[derive(Debug, Clone)]
pub struct SimilarityIndex {
    train: Arc<RatingTable>,
    sq_norms: Vec<f64>,
}

impl SimilarityIndex {
    pub fn new(train: Arc<RatingTable>) -> Self {
        let sq_norms = train
            .users()
            .map(|u| train.profile(u).iter().map(|&(_, r)| r * r).sum())
            .collect();
        Self { train, sq_norms }
    }

    pub fn train(&self) -> &Arc<RatingTable> {
        &self.train
    }

    fn finish(&self, dot: f64, u: UserId, v: UserId) -> f64 {
        let denom = self.sq_norms[u.index()] * self.sq_norms[v.index()];
        if denom <= 0.0 {
            return 0.0;
        }
        (dot / denom.sqrt()).min(1.0)
    }

    /// Pairwise cosine via a merge of the two sorted profiles.
    ///
    /// Products are accumulated in ascending item order, which is also the
    /// order [`similarity_row`](UserSimilarity::similarity_row) uses, so both
    /// paths agree bit for bit and `cosine(u, v) == cosine(v, u)`.
    pub fn cosine(&self, u: UserId, v: UserId) -> f64 {
        let (a, b) = (self.train.profile(u), self.train.profile(v));
        let (mut i, mut j, mut dot) = (0, 0, 0.0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    dot += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        self.finish(dot, u, v)
    }
}

impl UserSimilarity for SimilarityIndex {
    fn num_users(&self) -> usize {
        self.train.num_users()
    }

    fn similarity_row(&self, target: UserId) -> Vec<f64> {
        let mut dots = vec![0.0; self.train.num_users()];
        for &(i, r) in self.train.profile(target) {
            for &(v, rv) in self.train.raters(i) {
                dots[v.index()] += r * rv;
            }
        }
        dots.iter()
            .enumerate()
            .map(|(v, &d)| self.finish(d, target, UserId(v as u32)))
            .collect()
    }
}
