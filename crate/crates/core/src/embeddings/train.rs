use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::model::{EmbeddingModel, EMBEDDING_DIM};
use crate::dataset::{ItemId, RatingTable, UserId};
use crate::error::{Error, Result};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Adam step size.
    pub step_size: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Stop after more than this many epochs without improvement.
    pub patience: usize,
    /// Smallest drop in training MAE that counts as improvement.
    pub min_improvement: f64,
    pub dim: usize,
    pub init_std: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            step_size: 0.001,
            epochs: 50,
            batch_size: 128,
            patience: 10,
            min_improvement: 1e-5,
            dim: EMBEDDING_DIM,
            init_std: 0.1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0) || self.epochs == 0 || self.batch_size == 0 || self.dim == 0 || !(self.init_std > 0.0) {
            return Err(Error::InvalidArgument(format!("invalid training config {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Training MAE after every epoch that ran.
    pub epoch_mae: Vec<f64>,
    /// Best-so-far training MAE after every epoch; the returned model's is
    /// the last entry.
    pub accepted_mae: Vec<f64>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// Gradient of the mean absolute error over one batch, sparse in the
/// embedding rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gradient {
    pub users: BTreeMap<u32, Vec<f64>>,
    pub items: BTreeMap<u32, Vec<f64>>,
    pub weight: f64,
    pub bias: f64,
}

/// `(1/B) * sum |y(u,i) - r|`.
pub fn batch_loss(model: &EmbeddingModel, batch: &[(UserId, ItemId, f64)]) -> f64 {
    batch.iter().map(|&(u, i, r)| (model.predict(u, i) - r).abs()).sum::<f64>() / batch.len() as f64
}

/// Analytic gradient of [`batch_loss`]. Subgradients at the kinks are 0:
/// `sign(0) = 0` for the absolute value and `relu'(0) = 0`.
pub fn batch_gradient(model: &EmbeddingModel, batch: &[(UserId, ItemId, f64)]) -> Gradient {
    let d = model.dim();
    let scale = 1.0 / batch.len() as f64;
    let mut g = Gradient::default();
    for &(u, i, r) in batch {
        let pre = model.activation(u, i);
        let y = model.bias + pre.max(0.0);
        let dl = if y > r {
            scale
        } else if y < r {
            -scale
        } else {
            0.0
        };
        if dl == 0.0 {
            continue;
        }
        g.bias += dl;
        if pre <= 0.0 {
            continue;
        }
        let p = model.user_embedding(u);
        let q = model.item_embedding(i);
        let dot: f64 = p.iter().zip(q).map(|(a, b)| a * b).sum();
        g.weight += dl * dot;
        let gu = g.users.entry(u.0).or_insert_with(|| vec![0.0; d]);
        for k in 0..d {
            gu[k] += dl * model.weight * q[k];
        }
        let gi = g.items.entry(i.0).or_insert_with(|| vec![0.0; d]);
        for k in 0..d {
            gi[k] += dl * model.weight * p[k];
        }
    }
    g
}

/// Adam moments. Embedding rows are updated only when touched by a batch;
/// bias correction uses the global step count.
struct Adam {
    step_size: f64,
    t: i32,
    m_users: Vec<f64>,
    v_users: Vec<f64>,
    m_items: Vec<f64>,
    v_items: Vec<f64>,
    m_scalars: [f64; 2],
    v_scalars: [f64; 2],
}

impl Adam {
    fn new(model: &EmbeddingModel, step_size: f64) -> Self {
        Self {
            step_size,
            t: 0,
            m_users: vec![0.0; model.users.len()],
            v_users: vec![0.0; model.users.len()],
            m_items: vec![0.0; model.items.len()],
            v_items: vec![0.0; model.items.len()],
            m_scalars: [0.0; 2],
            v_scalars: [0.0; 2],
        }
    }

    fn update(param: &mut f64, m: &mut f64, v: &mut f64, g: f64, lr_t: f64) {
        *m = BETA1 * *m + (1.0 - BETA1) * g;
        *v = BETA2 * *v + (1.0 - BETA2) * g * g;
        *param -= lr_t * *m / (v.sqrt() + ADAM_EPS);
    }

    fn step(&mut self, model: &mut EmbeddingModel, g: &Gradient) {
        self.t += 1;
        let lr_t = self.step_size * (1.0 - BETA2.powi(self.t)).sqrt() / (1.0 - BETA1.powi(self.t));
        let d = model.dim;
        for (&u, row) in &g.users {
            let base = u as usize * d;
            for k in 0..d {
                let j = base + k;
                Self::update(&mut model.users[j], &mut self.m_users[j], &mut self.v_users[j], row[k], lr_t);
            }
        }
        for (&i, row) in &g.items {
            let base = i as usize * d;
            for k in 0..d {
                let j = base + k;
                Self::update(&mut model.items[j], &mut self.m_items[j], &mut self.v_items[j], row[k], lr_t);
            }
        }
        let [mw, mb] = &mut self.m_scalars;
        let [vw, vb] = &mut self.v_scalars;
        Self::update(&mut model.weight, mw, vw, g.weight, lr_t);
        Self::update(&mut model.bias, mb, vb, g.bias, lr_t);
    }
}

/// Seeded initial parameters: normal embeddings, unit weight, bias at the
/// training mean.
pub fn init_model(train: &RatingTable, config: &TrainConfig) -> Result<EmbeddingModel> {
    config.validate()?;
    let mean = train.global_mean().ok_or(Error::EmptyTable)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let normal = Normal::new(0.0, config.init_std).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let users = (0..train.num_users() * config.dim).map(|_| normal.sample(&mut rng)).collect();
    let items = (0..train.num_items() * config.dim).map(|_| normal.sample(&mut rng)).collect();
    EmbeddingModel::from_parts(config.dim, users, items, 1.0, mean)
}

pub fn train(train: &RatingTable, config: &TrainConfig) -> Result<EmbeddingModel> {
    train_with_report(train, config).map(|(m, _)| m)
}

/// Minimizes training MAE with mini-batch Adam and returns the best model
/// seen, with its per-epoch history.
pub fn train_with_report(train: &RatingTable, config: &TrainConfig) -> Result<(EmbeddingModel, TrainReport)> {
    let mut model = init_model(train, config)?;
    let data: Vec<(UserId, ItemId, f64)> = train.ratings().collect();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_ba7c);
    let mut adam = Adam::new(&model, config.step_size);

    let mut best = model.clone();
    let mut best_mae = model.mae(data.iter().copied());
    let mut report = TrainReport {
        epoch_mae: Vec::new(),
        accepted_mae: Vec::new(),
        best_epoch: 0,
        stopped_early: false,
    };
    let mut stalls = 0;
    let mut batch = Vec::with_capacity(config.batch_size);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&j| data[j]));
            let g = batch_gradient(&model, &batch);
            adam.step(&mut model, &g);
        }
        let mae = model.mae(data.iter().copied());
        report.epoch_mae.push(mae);
        if best_mae - mae >= config.min_improvement {
            best_mae = mae;
            best = model.clone();
            report.best_epoch = epoch;
            stalls = 0;
        } else {
            stalls += 1;
        }
        report.accepted_mae.push(best_mae);
        if stalls > config.patience {
            report.stopped_early = true;
            break;
        }
    }
    Ok((best, report))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::dataset::{Catalog, RatingScale};

    fn single_point() -> RatingTable {
        let mut cat = Catalog::new();
        let u = cat.intern_user("u");
        let i = cat.intern_item("i");
        RatingTable::from_triples(Arc::new(cat), RatingScale::integer(1, 5).unwrap(), [(u, i, 4.0)]).unwrap()
    }

    #[test]
    fn fits_a_single_rating() {
        let t = single_point();
        let m = train(&t, &TrainConfig::default()).unwrap();
        assert!((m.predict(UserId(0), ItemId(0)) - 4.0).abs() < 0.05);
    }

    #[test]
    fn deterministic_under_seed() {
        let t = crate::dataset::synth_dataset(&Default::default()).unwrap();
        let cfg = TrainConfig {
            epochs: 3,
            seed: 9,
            ..Default::default()
        };
        assert_eq!(train(&t, &cfg).unwrap(), train(&t, &cfg).unwrap());
    }

    #[test]
    fn accepted_mae_is_non_increasing() {
        let t = crate::dataset::synth_dataset(&Default::default()).unwrap();
        let (m, rep) = train_with_report(
            &t,
            &TrainConfig {
                epochs: 20,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(rep.accepted_mae.windows(2).all(|w| w[1] <= w[0]));
        assert!((m.mae(t.ratings()) - rep.accepted_mae.last().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn early_stop_after_patience() {
        // lr so small nothing improves by 1e-5: stops after patience + 1 epochs
        let t = crate::dataset::synth_dataset(&Default::default()).unwrap();
        let (_, rep) = train_with_report(
            &t,
            &TrainConfig {
                step_size: 1e-12,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(rep.stopped_early);
        assert_eq!(rep.epoch_mae.len(), 11);
        assert_eq!(rep.best_epoch, 0);
    }

    #[test]
    fn zero_residual_has_zero_gradient() {
        let m = EmbeddingModel::from_parts(1, vec![1.0], vec![2.0], 1.0, 1.0).unwrap();
        let g = batch_gradient(&m, &[(UserId(0), ItemId(0), 3.0)]);
        assert_eq!(g, Gradient::default());
    }
}
