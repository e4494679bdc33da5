use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::scale::RatingScale;
use super::table::{Catalog, ItemId, RatingTable, UserId};
use crate::error::{Error, Result};

const LATENT_DIM: usize = 3;

/// Shape of a popularity (or activity) distribution.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Skew {
    #[default]
    Uniform,
    /// Weight of the r-th ranked entity proportional to `(r + 1)^-exponent`.
    PowerLaw { exponent: f64 },
}

impl Skew {
    fn weights(self, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match self {
            Skew::Uniform => vec![1.0; n],
            Skew::PowerLaw { exponent } => {
                let mut w: Vec<f64> = (0..n).map(|r| ((r + 1) as f64).powf(-exponent)).collect();
                w.shuffle(rng);
                w
            }
        }
    }
}

/// Parameters of a synthetic rating table.
///
/// Ratings come from a small latent-factor model (user and item biases plus
/// a low-rank interaction, with noise) snapped into the scale, so user
/// similarity carries signal about held-out ratings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub users: usize,
    pub items: usize,
    pub density: f64,
    pub scale: RatingScale,
    /// Item popularity.
    pub skew: Skew,
    /// Profile-size distribution across users.
    pub activity: Skew,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            users: 50,
            items: 40,
            density: 0.2,
            scale: RatingScale::integer(1, 5).expect("static scale"),
            skew: Skew::Uniform,
            activity: Skew::Uniform,
            seed: 1,
        }
    }
}

pub fn synth_dataset(spec: &SynthSpec) -> Result<RatingTable> {
    if spec.users == 0 || spec.items == 0 {
        return Err(Error::InfeasibleSpec("user and item counts must be >= 1".into()));
    }
    if !(spec.density > 0.0 && spec.density <= 1.0) {
        return Err(Error::InfeasibleSpec(format!(
            "density {} is outside (0, 1]",
            spec.density
        )));
    }
    let cells = spec.users as f64 * spec.items as f64;
    if spec.density * cells < spec.users as f64 {
        return Err(Error::InfeasibleSpec(format!(
            "density {} yields fewer ratings than users",
            spec.density
        )));
    }
    let total = (spec.density * cells).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let sizes = profile_sizes(spec, total, &mut rng);
    let popularity = spec.skew.weights(spec.items, &mut rng);

    let mut catalog = Catalog::new();
    for u in 0..spec.users {
        catalog.intern_user(&format!("u{u}"));
    }
    for i in 0..spec.items {
        catalog.intern_item(&format!("i{i}"));
    }

    let normal = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
    let user_bias: Vec<f64> = (0..spec.users).map(|_| normal(&mut rng)).collect();
    let item_bias: Vec<f64> = (0..spec.items).map(|_| normal(&mut rng)).collect();
    let user_f: Vec<[f64; LATENT_DIM]> = (0..spec.users)
        .map(|_| std::array::from_fn(|_| normal(&mut rng)))
        .collect();
    let item_f: Vec<[f64; LATENT_DIM]> = (0..spec.items)
        .map(|_| std::array::from_fn(|_| normal(&mut rng)))
        .collect();

    let mid = 0.5 * (spec.scale.min() + spec.scale.max());
    let spread = 0.25 * (spec.scale.max() - spec.scale.min());
    let mut triples = Vec::with_capacity(total);
    let mut keys: Vec<(f64, usize)> = Vec::with_capacity(spec.items);

    for (u, &size) in sizes.iter().enumerate() {
        // weighted sampling without replacement (Efraimidis-Spirakis keys)
        keys.clear();
        keys.extend(popularity.iter().enumerate().map(|(i, &w)| {
            let x: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
            (x.ln() / w, i)
        }));
        let cut = size.min(keys.len());
        keys.select_nth_unstable_by(cut.saturating_sub(1), |a, b| b.0.total_cmp(&a.0));
        let mut chosen: Vec<usize> = keys[..cut].iter().map(|&(_, i)| i).collect();
        chosen.sort_unstable();
        for i in chosen {
            let dot: f64 = (0..LATENT_DIM).map(|d| user_f[u][d] * item_f[i][d]).sum();
            let raw = mid
                + spread
                    * (0.4 * user_bias[u] + 0.4 * item_bias[i] + 0.6 * dot / (LATENT_DIM as f64).sqrt()
                        + 0.3 * normal(&mut rng));
            triples.push((UserId(u as u32), ItemId(i as u32), spec.scale.snap(raw)));
        }
    }

    RatingTable::from_triples(Arc::new(catalog), spec.scale.clone(), triples)
}

/// Splits `total` ratings across users following the activity skew, each
/// profile holding between 1 and |I| ratings.
fn profile_sizes(spec: &SynthSpec, total: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let weights = spec.activity.weights(spec.users, rng);
    let sum: f64 = weights.iter().sum();
    let mut sizes: Vec<usize> = weights
        .iter()
        .map(|w| ((w / sum) * total as f64).floor() as usize)
        .map(|n| n.clamp(1, spec.items))
        .collect();
    let mut order: Vec<usize> = (0..spec.users).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    let mut assigned: usize = sizes.iter().sum();
    // hand out (or take back) the rounding remainder, heaviest users first
    while assigned != total {
        let mut moved = false;
        for &u in &order {
            if assigned < total && sizes[u] < spec.items {
                sizes[u] += 1;
                assigned += 1;
                moved = true;
            } else if assigned > total && sizes[u] > 1 {
                sizes[u] -= 1;
                assigned -= 1;
                moved = true;
            }
            if assigned == total {
                break;
            }
        }
        if !moved {
            break;
        }
    }
    sizes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_example_has_400_ratings() {
        let t = synth_dataset(&SynthSpec::default()).unwrap();
        assert_eq!(t.len(), 400);
        assert_eq!(t.num_users(), 50);
        for (_, _, r) in t.ratings() {
            assert!(t.scale().contains(r));
        }
    }

    #[test]
    fn same_seed_same_table() {
        let spec = SynthSpec {
            skew: Skew::PowerLaw { exponent: 1.0 },
            ..SynthSpec::default()
        };
        let a: Vec<_> = synth_dataset(&spec).unwrap().ratings().collect();
        let b: Vec<_> = synth_dataset(&spec).unwrap().ratings().collect();
        assert_eq!(a, b);
        let c: Vec<_> = synth_dataset(&SynthSpec { seed: 2, ..spec }).unwrap().ratings().collect();
        assert_ne!(a, c);
    }

    #[test]
    fn power_law_concentrates_on_top_decile() {
        let t = synth_dataset(&SynthSpec {
            skew: Skew::PowerLaw { exponent: 2.0 },
            ..SynthSpec::default()
        })
        .unwrap();
        let mut counts: Vec<usize> = t.items().map(|i| t.raters(i).len()).collect();
        counts.sort_unstable_by(|a, b| b.cmp(a));
        let decile = counts.len().div_ceil(10);
        let top: usize = counts[..decile].iter().sum();
        assert!(top as f64 / t.len() as f64 > 0.40, "top decile share {}", top as f64 / t.len() as f64);
    }

    #[test]
    fn realized_density_close_to_requested() {
        for (users, items, density) in [(50, 40, 0.2), (200, 300, 0.07), (13, 17, 0.5)] {
            let spec = SynthSpec {
                users,
                items,
                density,
                activity: Skew::PowerLaw { exponent: 0.8 },
                ..SynthSpec::default()
            };
            let t = synth_dataset(&spec).unwrap();
            let realized = t.len() as f64 / (users * items) as f64;
            assert!((realized - density).abs() / density < 0.05, "{realized} vs {density}");
        }
    }

    #[test]
    fn infeasible_specs() {
        let bad = |spec: SynthSpec| matches!(synth_dataset(&spec), Err(Error::InfeasibleSpec(_)));
        assert!(bad(SynthSpec { density: 0.0, ..SynthSpec::default() }));
        assert!(bad(SynthSpec { density: 1.5, ..SynthSpec::default() }));
        assert!(bad(SynthSpec { users: 0, ..SynthSpec::default() }));
        // 0.01 * 50 * 40 = 20 ratings < 50 users
        assert!(bad(SynthSpec { density: 0.01, ..SynthSpec::default() }));
    }
}
