//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Arc;

use reuseknn::dataset::{ItemId, RatingScale, RatingTable, Skew, SynthSpec, UserId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reuseknn::embeddings::{batch_gradient, batch_loss, EmbeddingModel, ItemEmbeddingSimilarity, UserEmbeddingSimilarity};
use reuseknn::knn::{DpMode, QueryEngine, Strategy, StrategySpec, UserSimilarity};
use reuseknn::metrics::Tail;

pub fn synth(users: usize, items: usize, density: f64, seed: u64) -> RatingTable {
    reuseknn::dataset::synth_dataset(&SynthSpec {
        users,
        items,
        density,
        scale: RatingScale::integer(1, 5).unwrap(),
        skew: Skew::PowerLaw { exponent: 1.0 },
        activity: Skew::PowerLaw { exponent: 0.5 },
        seed,
    })
    .unwrap()
}

/// Dense rating matrix, 0 for missing.
pub fn dense(t: &RatingTable) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; t.num_items()]; t.num_users()];
    for (u, i, r) in t.ratings() {
        m[u.index()][i.index()] = r;
    }
    m
}

/// Cosine over dense rows, summing in ascending item order.
pub fn cosine_oracle(m: &[Vec<f64>], u: usize, v: usize) -> f64 {
    let nu: f64 = m[u].iter().filter(|&&x| x != 0.0).map(|x| x * x).sum();
    let nv: f64 = m[v].iter().filter(|&&x| x != 0.0).map(|x| x * x).sum();
    let dot: f64 = m[u].iter().zip(&m[v]).filter(|(a, b)| **a != 0.0 && **b != 0.0).map(|(a, b)| a * b).sum();
    let denom = nu * nv;
    if denom <= 0.0 {
        0.0
    } else {
        (dot / denom.sqrt()).min(1.0)
    }
}

pub fn embed_cos(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum();
    let nb: f64 = b.iter().map(|x| x * x).sum();
    let d = (na * nb).sqrt();
    if d == 0.0 {
        0.0
    } else {
        (dot / d).clamp(-1.0, 1.0)
    }
}

/// `|{y != target, y != c : s(y) <= s(c)}|`, by direct counting.
pub fn brute_rank(scores: &[f64], target: usize, c: usize) -> u64 {
    (0..scores.len())
        .filter(|&y| y != target && y != c && scores[y] <= scores[c])
        .count() as u64
}

/// Deterministic pseudo-random model for the embedding strategies.
pub fn random_model(users: usize, items: usize, dim: usize, seed: u64) -> EmbeddingModel {
    let mut x = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) | 1;
    let mut next = move || {
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let u: Vec<f64> = (0..users * dim).map(|_| next()).collect();
    let i: Vec<f64> = (0..items * dim).map(|_| next()).collect();
    EmbeddingModel::from_parts(dim, u, i, 1.3, 2.5).unwrap()
}

/// Every admissible neighbor set for one query: the selections reachable by
/// some ordering of the tied candidates at the cut.
pub fn admissible_sets(cands: &[usize], key: impl Fn(usize) -> (f64, Option<usize>), k: usize) -> Vec<BTreeSet<usize>> {
    // key = (primary score, deterministic tiebreak); None means the tie is open
    let mut sorted: Vec<usize> = cands.to_vec();
    sorted.sort_by(|&a, &b| {
        let (ka, ta) = key(a);
        let (kb, tb) = key(b);
        kb.total_cmp(&ka).then(ta.cmp(&tb))
    });
    if sorted.len() <= k {
        return vec![sorted.into_iter().collect()];
    }
    let cut = key(sorted[k - 1]);
    if cut.1.is_some() {
        return vec![sorted[..k].iter().copied().collect()];
    }
    let above: Vec<usize> = sorted.iter().copied().filter(|&c| key(c).0 > cut.0).collect();
    let tied: Vec<usize> = sorted.iter().copied().filter(|&c| key(c).0 == cut.0).collect();
    let need = k - above.len();
    let mut out = Vec::new();
    let mut pick: Vec<usize> = (0..need).collect();
    loop {
        let mut s: BTreeSet<usize> = above.iter().copied().collect();
        s.extend(pick.iter().map(|&j| tied[j]));
        out.push(s);
        let mut j = need;
        loop {
            if j == 0 {
                return out;
            }
            j -= 1;
            if pick[j] < tied.len() - need + j {
                break;
            }
        }
        pick[j] += 1;
        for l in j + 1..need {
            pick[l] = pick[l - 1] + 1;
        }
    }
}

pub struct Replay {
    pub queries: usize,
    pub max_error: f64,
    pub tie_sets: usize,
}

/// Runs every user's stream through the engine and checks each selection and
/// estimate against a from-scratch evaluation.
pub fn replay(
    train: Arc<RatingTable>,
    strategy: Strategy,
    k: usize,
    dp: DpMode,
    tau: f64,
    seed: u64,
    queries_per_user: usize,
) -> Result<Replay, String> {
    let n = train.num_users();
    let m = dense(&train);
    let model = Arc::new(random_model(n, train.num_items(), 4, seed ^ 0xfeed));
    let sims: Vec<Vec<f64>> = (0..n)
        .map(|u| {
            (0..n)
                .map(|v| {
                    if strategy.uses_embeddings() {
                        embed_cos(model.user_embedding(UserId(u as u32)), model.user_embedding(UserId(v as u32)))
                    } else {
                        cosine_oracle(&m, u, v)
                    }
                })
                .collect()
        })
        .collect();
    let raters = |i: usize| -> Vec<usize> { (0..n).filter(|&v| m[v][i] != 0.0).collect() };
    let expect: Vec<f64> = (0..n)
        .map(|c| {
            (0..train.num_items())
                .filter(|&i| m[c][i] != 0.0)
                .map(|i| raters(i).len() as f64 / n as f64)
                .sum()
        })
        .collect();

    let spec = StrategySpec::new(strategy, k).with_dp(dp, tau).with_seed(seed);
    let mut engine = if strategy.uses_embeddings() {
        let sim: Arc<dyn UserSimilarity> = Arc::new(UserEmbeddingSimilarity(model.clone()));
        QueryEngine::new(spec, train.clone(), sim)
            .map_err(|e| e.to_string())?
            .with_item_similarity(Arc::new(ItemEmbeddingSimilarity(model.clone())))
    } else {
        QueryEngine::cosine(spec, train.clone()).map_err(|e| e.to_string())?
    };

    let mut out = Replay {
        queries: 0,
        max_error: 0.0,
        tie_sets: 0,
    };
    for u in 0..n {
        let own: Vec<usize> = (0..train.num_items()).filter(|&i| m[u][i] != 0.0).collect();
        if own.is_empty() {
            continue;
        }
        let items: Vec<usize> = (0..train.num_items())
            .map(|j| (j + u * 3) % train.num_items())
            .filter(|i| !own.contains(i))
            .take(queries_per_user)
            .collect();
        let mut history: Vec<(usize, BTreeSet<usize>)> = Vec::new();
        for &i in &items {
            let cands: Vec<usize> = raters(i).into_iter().filter(|&c| c != u).collect();
            let s = &sims[u];
            let sets = match strategy {
                Strategy::UserKnn | Strategy::NeuKnn => admissible_sets(&cands, |c| (s[c], Some(c)), k),
                Strategy::UserKnnReuse => {
                    let prev: BTreeSet<usize> = history.iter().flat_map(|(_, ns)| ns.iter().copied()).collect();
                    admissible_sets(&cands, |c| (s[c] + if prev.contains(&c) { 10.0 } else { 0.0 }, Some(c)), k)
                }
                _ => {
                    let reuse: Vec<f64> = match strategy {
                        Strategy::Expect => expect.clone(),
                        Strategy::Gain => (0..n)
                            .map(|c| own.iter().filter(|&&j| m[c][j] != 0.0).count() as f64 / own.len() as f64)
                            .collect(),
                        _ => (0..n)
                            .map(|c| {
                                history
                                    .iter()
                                    .filter(|(_, ns)| ns.contains(&c))
                                    .map(|&(j, _)| {
                                        embed_cos(
                                            model.item_embedding(ItemId(i as u32)),
                                            model.item_embedding(ItemId(j as u32)),
                                        )
                                    })
                                    .sum()
                            })
                            .collect(),
                    };
                    admissible_sets(
                        &cands,
                        |c| ((brute_rank(s, u, c) + brute_rank(&reuse, u, c)) as f64, None),
                        k,
                    )
                }
            };
            if sets.len() > 1 {
                out.tie_sets += 1;
            }
            let p = engine
                .query(UserId(u as u32), ItemId(i as u32))
                .map_err(|e| e.to_string())?;
            let chosen: BTreeSet<usize> = p.neighbors.iter().map(|nb| nb.user.index()).collect();
            if chosen.len() != p.neighbors.len() || !sets.contains(&chosen) {
                return Err(format!(
                    "{strategy} k={k} user {u} item {i}: chose {chosen:?}, admissible {sets:?}"
                ));
            }
            // estimate: similarity-weighted mean with negative weights dropped
            let (mut num, mut den) = (0.0, 0.0);
            for nb in &p.neighbors {
                let c = nb.user.index();
                if (nb.similarity - s[c]).abs() > 0.0 {
                    return Err(format!("similarity of {c} reported {} expected {}", nb.similarity, s[c]));
                }
                if !nb.protected && nb.served != m[c][i] {
                    return Err(format!("unprotected serving of {c} changed the rating"));
                }
                if dp == DpMode::None && nb.served != m[c][i] {
                    return Err(format!("non-DP serving of {c} changed the rating"));
                }
                let w = s[c].max(0.0);
                num += w * nb.served;
                den += w;
            }
            let expected = if den > 0.0 {
                num / den
            } else {
                own.iter().map(|&j| m[u][j]).sum::<f64>() / own.len() as f64
            };
            let err = (expected - p.score).abs();
            out.max_error = out.max_error.max(err);
            if err > 1e-12 {
                return Err(format!("estimate {} expected {expected} (user {u} item {i})", p.score));
            }
            history.push((i, chosen));
            out.queries += 1;
        }
    }
    Ok(out)
}

/// Mann-Whitney p-value by enumerating every relabelling of the pooled
/// sample, with U counted pairwise.
pub fn mw_enumerated(a: &[f64], b: &[f64], tail: Tail) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let n = pooled.len();
    let na = a.len();
    let u_of = |mask: u32| -> f64 {
        let mut u = 0.0;
        for x in 0..n {
            if mask >> x & 1 == 0 {
                continue;
            }
            for y in 0..n {
                if mask >> y & 1 == 1 {
                    continue;
                }
                if pooled[x] > pooled[y] {
                    u += 1.0;
                } else if pooled[x] == pooled[y] {
                    u += 0.5;
                }
            }
        }
        u
    };
    let observed = u_of((1u32 << na) - 1);
    let mean = (na * (n - na)) as f64 / 2.0;
    let (mut hits, mut total) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != na {
            continue;
        }
        let u = u_of(mask);
        let extreme = match tail {
            Tail::Less => u <= observed + 1e-9,
            Tail::Greater => u >= observed - 1e-9,
            Tail::TwoSided => (u - mean).abs() >= (observed - mean).abs() - 1e-9,
        };
        hits += extreme as u64;
        total += 1;
    }
    hits as f64 / total as f64
}

/// Textbook sample correlation: covariance over the product of standard
/// deviations, each with an n-1 denominator.
pub fn pearson_textbook(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (n - 1.0);
    let sx = (x.iter().map(|a| (a - mx).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let sy = (y.iter().map(|b| (b - my).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    cov / (sx * sy)
}

#[derive(Clone)]
pub struct Params {
    dim: usize,
    users: Vec<f64>,
    items: Vec<f64>,
    weight: f64,
    bias: f64,
}

impl Params {
    fn model(&self) -> EmbeddingModel {
        EmbeddingModel::from_parts(self.dim, self.users.clone(), self.items.clone(), self.weight, self.bias).unwrap()
    }
}

fn distance_to_kink(p: &Params, batch: &[(UserId, ItemId, f64)]) -> f64 {
    let m = p.model();
    batch
        .iter()
        .map(|&(u, i, r)| {
            let a = m.activation(u, i);
            a.abs().min((m.predict(u, i) - r).abs())
        })
        .fold(f64::INFINITY, f64::min)
}

/// Compares the analytic gradient with central differences on every
/// parameter; returns the worst relative error.
pub fn gradient_check(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (nu, ni, dim) = (6, 5, 4);
    let (p, batch) = loop {
        let p = Params {
            dim,
            users: (0..nu * dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
            items: (0..ni * dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
            weight: rng.random_range(0.5..2.0),
            bias: rng.random_range(1.0..4.0),
        };
        let batch: Vec<(UserId, ItemId, f64)> = (0..8)
            .map(|_| {
                (
                    UserId(rng.random_range(0..nu as u32)),
                    ItemId(rng.random_range(0..ni as u32)),
                    rng.random_range(1..=5) as f64,
                )
            })
            .collect();
        // the loss is piecewise linear; keep the probe away from its kinks
        if distance_to_kink(&p, &batch) > 1e-3 {
            break (p, batch);
        }
    };
    let g = batch_gradient(&p.model(), &batch);
    let h = 1e-6;
    let fd = |shift: &dyn Fn(&mut Params, f64)| -> f64 {
        let mut plus = p.clone();
        shift(&mut plus, h);
        let mut minus = p.clone();
        shift(&mut minus, -h);
        (batch_loss(&plus.model(), &batch) - batch_loss(&minus.model(), &batch)) / (2.0 * h)
    };
    let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-6);
    let mut worst: f64 = 0.0;
    for u in 0..nu {
        for d in 0..dim {
            let a = g.users.get(&(u as u32)).map_or(0.0, |v| v[d]);
            let n = fd(&|q: &mut Params, e| q.users[u * dim + d] += e);
            worst = worst.max(rel(a, n));
        }
    }
    for i in 0..ni {
        for d in 0..dim {
            let a = g.items.get(&(i as u32)).map_or(0.0, |v| v[d]);
            let n = fd(&|q: &mut Params, e| q.items[i * dim + d] += e);
            worst = worst.max(rel(a, n));
        }
    }
    worst = worst.max(rel(g.weight, fd(&|q: &mut Params, e| q.weight += e)));
    worst.max(rel(g.bias, fd(&|q: &mut Params, e| q.bias += e)))
}

