use serde::{Deserialize, Serialize};

use crate::dataset::{ItemId, UserId};
use crate::error::{Error, Result};

pub const EMBEDDING_DIM: usize = 16;

/// `y(u, i) = b + relu(w * <p_u, q_i>)` with row-major embedding matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingModel {
    pub(crate) dim: usize,
    pub(crate) users: Vec<f64>,
    pub(crate) items: Vec<f64>,
    pub(crate) weight: f64,
    pub(crate) bias: f64,
}

impl EmbeddingModel {
    pub fn from_parts(dim: usize, users: Vec<f64>, items: Vec<f64>, weight: f64, bias: f64) -> Result<Self> {
        if dim == 0 || users.len() % dim != 0 || items.len() % dim != 0 {
            return Err(Error::InvalidArgument(format!(
                "embedding matrices of lengths {} and {} do not fit dimension {dim}",
                users.len(),
                items.len()
            )));
        }
        Ok(Self {
            dim,
            users,
            items,
            weight,
            bias,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_users(&self) -> usize {
        self.users.len() / self.dim
    }

    pub fn num_items(&self) -> usize {
        self.items.len() / self.dim
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn user_embedding(&self, u: UserId) -> &[f64] {
        &self.users[u.index() * self.dim..(u.index() + 1) * self.dim]
    }

    pub fn item_embedding(&self, i: ItemId) -> &[f64] {
        &self.items[i.index() * self.dim..(i.index() + 1) * self.dim]
    }

    /// `w * <p_u, q_i>`, the ReLU argument.
    pub fn activation(&self, u: UserId, i: ItemId) -> f64 {
        let dot: f64 = self
            .user_embedding(u)
            .iter()
            .zip(self.item_embedding(i))
            .map(|(a, b)| a * b)
            .sum();
        self.weight * dot
    }

    pub fn predict(&self, u: UserId, i: ItemId) -> f64 {
        self.bias + self.activation(u, i).max(0.0)
    }

    /// Mean absolute error over `(user, item, rating)` triples.
    pub fn mae(&self, data: impl IntoIterator<Item = (UserId, ItemId, f64)>) -> f64 {
        let (mut sum, mut n) = (0.0, 0usize);
        for (u, i, r) in data {
            sum += (self.predict(u, i) - r).abs();
            n += 1;
        }
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }
}

/// Cosine of two embeddings; 0 when either is the zero vector.
pub fn embed_sim(a: &[f64], b: &[f64]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    let denom = (na * nb).sqrt();
    if denom == 0.0 {
        return 0.0;
    }
    (dot / denom).clamp(-1.0, 1.0)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn cosine_cases() {
        let mut a = [0.0; EMBEDDING_DIM];
        a[0] = 1.0;
        let mut b = a;
        b[1] = 1.0;
        assert_eq!(embed_sim(&a, &a), 1.0);
        let neg: Vec<f64> = a.iter().map(|x| -x).collect();
        assert_eq!(embed_sim(&a, &neg), -1.0);
        assert!((embed_sim(&a, &b) - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(embed_sim(&a, &[0.0; EMBEDDING_DIM]), 0.0);
    }

    #[test]
    fn prediction_never_below_bias() {
        let m = EmbeddingModel::from_parts(2, vec![1.0, -1.0], vec![1.0, 1.0, -3.0, 0.5], 1.0, 2.0).unwrap();
        assert_eq!(m.predict(UserId(0), ItemId(0)), 2.0);
        assert_eq!(m.predict(UserId(0), ItemId(1)), 2.0);
        let m2 = EmbeddingModel { weight: -1.0, ..m };
        assert_eq!(m2.predict(UserId(0), ItemId(1)), 5.5);
    }

    proptest! {
        #[test]
        fn cosine_symmetric_and_scale_invariant(
            a in prop::collection::vec(-3.0f64..3.0, 4),
            b in prop::collection::vec(-3.0f64..3.0, 4),
            c in 0.01f64..100.0,
        ) {
            let s = embed_sim(&a, &b);
            prop_assert!((-1.0..=1.0).contains(&s));
            prop_assert_eq!(s, embed_sim(&b, &a));
            let scaled: Vec<f64> = b.iter().map(|x| x * c).collect();
            prop_assert!((embed_sim(&a, &scaled) - s).abs() < 1e-12);
        }
    }
}
