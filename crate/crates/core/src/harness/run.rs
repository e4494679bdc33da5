use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::compare::{compare, Comparison};
use super::config::{prepare, ExperimentConfig};
use super::manifest::{CellFailure, DatasetSummary, FoldTiming, RunManifest, TauRecord};
use super::results::ResultSet;
use crate::dataset::{Catalog, FoldSplit, ItemId, RatingTable, UserId};
use crate::embeddings::{self, EmbeddingModel, ItemEmbeddingSimilarity, TrainConfig, UserEmbeddingSimilarity};
use crate::error::{Error, Result};
use crate::knn::{expect_scores, DpMode, Method, QueryEngine, SimilarityIndex, Strategy, StrategySpec};
use crate::metrics::{MetricReport, QueryTrace};
use crate::privacy::{estimate_tau, UsageLedger};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellKey {
    pub fold: usize,
    pub method: Method,
    pub k: usize,
}

impl CellKey {
    /// Stable per-cell seed derived from the run seed.
    pub fn seed(&self, run_seed: u64) -> u64 {
        let method = self.method.strategy as u64 * 3 + self.method.dp as u64;
        mix(mix(mix(run_seed ^ 0x6365_6c6c) ^ self.fold as u64) ^ method) ^ self.k as u64
    }

    pub fn label(&self) -> String {
        format!("fold{}_{}_k{}", self.fold, self.method, self.k)
    }
}

pub(crate) fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Everything a cell reads from its fold; shared immutably by all cells.
pub struct FoldContext {
    pub fold: usize,
    pub train: Arc<RatingTable>,
    pub test: RatingTable,
    pub order: Vec<(UserId, Vec<ItemId>)>,
    pub cosine: Arc<SimilarityIndex>,
    pub expect: Arc<Vec<f64>>,
    pub embeddings: Option<Arc<EmbeddingModel>>,
}

impl FoldContext {
    pub fn new(split: FoldSplit, run_seed: u64, embeddings: Option<&TrainConfig>) -> Result<Self> {
        let train = Arc::new(split.train);
        let order = query_order(&split.test, run_seed, split.fold);
        let model = match embeddings {
            Some(cfg) => {
                let cfg = TrainConfig {
                    seed: mix(cfg.seed ^ mix(run_seed ^ split.fold as u64)),
                    ..*cfg
                };
                Some(Arc::new(embeddings::train(&train, &cfg)?))
            }
            None => None,
        };
        Ok(Self {
            fold: split.fold,
            cosine: Arc::new(SimilarityIndex::new(Arc::clone(&train))),
            expect: Arc::new(expect_scores(&train)),
            train,
            test: split.test,
            order,
            embeddings: model,
        })
    }
}

/// The global query order of a fold: targets by ascending id, each target's
/// test items in a seeded shuffle. It depends only on the run seed and the
/// fold, so every method sees the same stream.
pub fn query_order(test: &RatingTable, run_seed: u64, fold: usize) -> Vec<(UserId, Vec<ItemId>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(run_seed ^ mix(0x6f72_6465_72 ^ fold as u64)));
    test.users()
        .filter(|&u| !test.profile(u).is_empty())
        .map(|u| {
            let mut items: Vec<ItemId> = test.profile(u).iter().map(|&(i, _)| i).collect();
            items.shuffle(&mut rng);
            (u, items)
        })
        .collect()
}

/// Result of one (fold, method, k) cell.
#[derive(Debug, Clone)]
pub struct CellOutput {
    pub key: CellKey,
    pub ledger: UsageLedger,
    pub report: MetricReport,
    pub elapsed: Duration,
}

pub fn build_engine(ctx: &FoldContext, spec: StrategySpec) -> Result<QueryEngine> {
    if spec.strategy.uses_embeddings() {
        let model = ctx
            .embeddings
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument(format!("{} needs trained embeddings", spec.strategy)))?;
        let engine = QueryEngine::new(spec, Arc::clone(&ctx.train), Arc::new(UserEmbeddingSimilarity(Arc::clone(model))))?;
        Ok(engine.with_item_similarity(Arc::new(ItemEmbeddingSimilarity(Arc::clone(model)))))
    } else {
        let engine = QueryEngine::new(spec, Arc::clone(&ctx.train), ctx.cosine.clone())?;
        Ok(engine.with_expect_scores(Arc::clone(&ctx.expect)))
    }
}

/// Processes a fold's whole query stream for one method with a fresh ledger.
pub fn run_cell(ctx: &FoldContext, key: CellKey, tau: f64, run_seed: u64) -> Result<CellOutput> {
    run_cell_traced(ctx, key, tau, run_seed).map(|(out, _)| out)
}

/// [`run_cell`] that also hands back the query trace.
pub fn run_cell_traced(ctx: &FoldContext, key: CellKey, tau: f64, run_seed: u64) -> Result<(CellOutput, QueryTrace)> {
    let started = Instant::now();
    let spec = StrategySpec::new(key.method.strategy, key.k)
        .with_dp(key.method.dp, tau)
        .with_seed(key.seed(run_seed));
    let mut engine = build_engine(ctx, spec)?;
    let mut trace = QueryTrace::new();
    let mut served = 0u64;
    for (target, items) in &ctx.order {
        let predictions = engine.process_query_stream(*target, items)?;
        served += predictions.iter().map(|p| p.neighbors.len() as u64).sum::<u64>();
        trace.push_stream(*target, &predictions, &ctx.test)?;
    }
    let ledger = engine.into_ledger();
    if ledger.total_servings() != served {
        return Err(Error::Mismatch(format!(
            "ledger counts {} servings, trace {}",
            ledger.total_servings(),
            served
        )));
    }
    let report = MetricReport::compute(key.fold, key.method.to_string(), key.k, &trace, &ctx.train, &ledger)?;
    let out = CellOutput {
        key,
        ledger,
        report,
        elapsed: started.elapsed(),
    };
    Ok((out, trace))
}

/// Everything a run produced, before or after writing.
pub struct RunOutcome {
    pub catalog: Arc<Catalog>,
    pub manifest: RunManifest,
    pub cells: Vec<CellOutput>,
    pub results: ResultSet,
    pub significance: Vec<Comparison>,
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Runs every cell of the experiment in memory. `base` resolves relative
/// dataset paths.
pub fn execute(config: &ExperimentConfig, base: &Path) -> Result<RunOutcome> {
    config.validate()?;
    let started = Instant::now();
    let methods = config.method_list()?;
    let (table, splits) = prepare(config, base)?;
    let pool = pool(config.threads)?;
    let needs_embeddings = methods.iter().any(|m| m.strategy.uses_embeddings());
    let selected: Vec<FoldSplit> = splits.into_iter().filter(|s| config.folds.contains(&s.fold)).collect();

    let prep: Vec<(Result<FoldContext>, Duration)> = pool.install(|| {
        selected
            .into_par_iter()
            .map(|s| {
                let t = Instant::now();
                let ctx = FoldContext::new(s, config.seed, needs_embeddings.then_some(&config.embeddings));
                (ctx, t.elapsed())
            })
            .collect()
    });
    let mut contexts = Vec::new();
    let mut fold_time: BTreeMap<usize, Duration> = BTreeMap::new();
    for (ctx, elapsed) in prep {
        let ctx = ctx?;
        fold_time.insert(ctx.fold, elapsed);
        contexts.push(ctx);
    }

    // thresholds: explicit, or estimated from plain UserKNN usage
    let plain = Method::new(Strategy::UserKnn, DpMode::None);
    let mut estimate_keys = Vec::new();
    for ctx in &contexts {
        for &k in &config.k {
            if config.fixed_tau(k)?.is_none() {
                estimate_keys.push((ctx, CellKey { fold: ctx.fold, method: plain, k }));
            }
        }
    }
    let estimated: Vec<(CellKey, Result<CellOutput>)> = pool.install(|| {
        estimate_keys
            .par_iter()
            .map(|(ctx, key)| (*key, run_cell(ctx, *key, f64::INFINITY, config.seed)))
            .collect()
    });
    let mut taus: BTreeMap<(usize, usize), TauRecord> = BTreeMap::new();
    let mut reusable: BTreeMap<CellKey, CellOutput> = BTreeMap::new();
    for ctx in &contexts {
        for &k in &config.k {
            if let Some(t) = config.fixed_tau(k)? {
                taus.insert((ctx.fold, k), TauRecord::fixed(ctx.fold, k, t));
            }
        }
    }
    for (key, out) in estimated {
        let record = match out {
            Ok(out) => match estimate_tau(out.ledger.usages()) {
                Ok(t) => {
                    *fold_time.entry(key.fold).or_default() += out.elapsed;
                    reusable.insert(key, out);
                    TauRecord::estimated(key.fold, key.k, Ok(t))
                }
                Err(e) => TauRecord::estimated(key.fold, key.k, Err(e.to_string())),
            },
            Err(e) => TauRecord::estimated(key.fold, key.k, Err(e.to_string())),
        };
        taus.insert((key.fold, key.k), record);
    }

    let mut keys = Vec::new();
    for ctx in &contexts {
        for &method in &methods {
            for &k in &config.k {
                keys.push((ctx, CellKey { fold: ctx.fold, method, k }));
            }
        }
    }
    let reusable = Mutex::new(reusable);
    let outputs: Vec<(CellKey, Result<CellOutput>)> = pool.install(|| {
        keys.par_iter()
            .map(|(ctx, key)| {
                let tau = taus[&(key.fold, key.k)].tau;
                let out = match tau {
                    None if key.method.dp == DpMode::Threshold => Err(Error::Config(format!(
                        "no threshold available for fold {} k {}",
                        key.fold, key.k
                    ))),
                    _ => {
                        let tau = tau.unwrap_or(f64::INFINITY);
                        let cached = reusable.lock().expect("cache lock").remove(key);
                        match cached {
                            Some(out) => reclassify(out, tau),
                            None => run_cell(ctx, *key, tau, config.seed),
                        }
                    }
                };
                (*key, out)
            })
            .collect()
    });

    let mut cells = Vec::new();
    let mut failures = Vec::new();
    for (key, out) in outputs {
        match out {
            Ok(out) => {
                *fold_time.entry(key.fold).or_default() += out.elapsed;
                cells.push(out);
            }
            Err(e) => {
                log::warn!("cell {} failed: {e}", key.label());
                failures.push(CellFailure {
                    fold: key.fold,
                    method: key.method.to_string(),
                    k: key.k,
                    error: e.to_string(),
                });
            }
        }
    }

    let results = ResultSet::from_cells(&cells, table.num_items(), |u| table.catalog().user_name(u).to_string());
    let significance = config
        .significance
        .iter()
        .flat_map(|pair| {
            config.k.iter().filter_map(|&k| {
                match compare(&results, &pair.a, &pair.b, pair.metric, k, pair.tail, pair.alpha) {
                    Ok(c) => Some(c),
                    Err(e) => {
                        log::warn!("comparison {} vs {} on {} at k={k} failed: {e}", pair.a, pair.b, pair.metric);
                        None
                    }
                }
            })
        })
        .collect();

    let manifest = RunManifest {
        config: config.clone(),
        input_hash: super::manifest::input_hash(config, base)?,
        dataset: DatasetSummary {
            users: table.num_users(),
            items: table.num_items(),
            ratings: table.len(),
        },
        taus: taus.into_values().collect(),
        folds: fold_time
            .into_iter()
            .map(|(fold, t)| FoldTiming {
                fold,
                seconds: t.as_secs_f64(),
            })
            .collect(),
        total_seconds: started.elapsed().as_secs_f64(),
        failures,
        files: Vec::new(),
    };
    Ok(RunOutcome {
        catalog: Arc::clone(table.catalog()),
        manifest,
        cells,
        results,
        significance,
    })
}

/// Judges a finished no-DP cell against its final threshold; only the
/// vulnerable share depends on it.
fn reclassify(mut out: CellOutput, tau: f64) -> Result<CellOutput> {
    out.ledger = out.ledger.reclassified(tau)?;
    let (vulnerable, _) = out.ledger.classify();
    out.report.tau = tau;
    out.report.vulnerable_fraction = vulnerable.len() as f64 / out.ledger.num_users().max(1) as f64;
    Ok(out)
}

/// Runs the experiment and writes every output under `config.output`
/// (relative to `base`).
pub fn run(config: &ExperimentConfig, base: &Path) -> Result<RunOutcome> {
    let mut outcome = execute(config, base)?;
    let dir = base.join(&config.output);
    super::output::write_all(&dir, &mut outcome)?;
    Ok(outcome)
}
