use std::collections::BTreeMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::predict::{predict, Prediction, ServedNeighbor};
use super::ranking::population_ranks;
use super::reusability::{expect_scores, gain_row};
use super::select::{select_neighbors, SelectionInputs};
use super::similarity::{ItemSimilarity, SimilarityIndex, UserSimilarity};
use super::state::NeighborhoodState;
use super::strategy::{Strategy, StrategySpec};
use crate::dataset::{ItemId, RatingTable, UserId};
use crate::embeddings::neuknn_reusability_row;
use crate::error::{Error, Result};
use crate::privacy::UsageLedger;

const TIE_STREAM: u64 = 1;
const DP_STREAM: u64 = 2;

/// Scores that stay fixed for the whole of one target's stream.
struct TargetView {
    target: UserId,
    similarities: Vec<f64>,
    similarity_ranks: Option<Vec<u32>>,
    reuse_ranks: Option<Vec<u32>>,
}

/// Stateful query processor for one experiment cell.
///
/// Owns the usage ledger, every target's neighborhood state and the seeded
/// random streams for tie breaking and randomized response. Queries must be
/// fed in the cell's global order; the ledger is shared by all targets.
pub struct QueryEngine {
    spec: StrategySpec,
    train: Arc<RatingTable>,
    similarity: Arc<dyn UserSimilarity>,
    item_similarity: Option<Arc<dyn ItemSimilarity>>,
    expect: Option<Arc<Vec<f64>>>,
    ledger: UsageLedger,
    tie_rng: ChaCha8Rng,
    dp_rng: ChaCha8Rng,
    global_mean: f64,
    states: BTreeMap<UserId, NeighborhoodState>,
    view: Option<TargetView>,
}

impl QueryEngine {
    pub fn new(spec: StrategySpec, train: Arc<RatingTable>, similarity: Arc<dyn UserSimilarity>) -> Result<Self> {
        spec.validate()?;
        if similarity.num_users() != train.num_users() {
            return Err(Error::InvalidArgument(format!(
                "similarity covers {} users, train has {}",
                similarity.num_users(),
                train.num_users()
            )));
        }
        let global_mean = train.global_mean().ok_or(Error::EmptyTable)?;
        let mut tie_rng = ChaCha8Rng::seed_from_u64(spec.seed);
        tie_rng.set_stream(TIE_STREAM);
        let mut dp_rng = ChaCha8Rng::seed_from_u64(spec.seed);
        dp_rng.set_stream(DP_STREAM);
        let expect = (spec.strategy == Strategy::Expect).then(|| Arc::new(expect_scores(&train)));
        Ok(Self {
            ledger: UsageLedger::new(train.num_users(), spec.dp, spec.tau)?,
            spec,
            train,
            similarity,
            item_similarity: None,
            expect,
            tie_rng,
            dp_rng,
            global_mean,
            states: BTreeMap::new(),
            view: None,
        })
    }

    /// Engine over cosine similarity of the training profiles.
    pub fn cosine(spec: StrategySpec, train: Arc<RatingTable>) -> Result<Self> {
        let index = Arc::new(SimilarityIndex::new(train.clone()));
        Self::new(spec, train, index)
    }

    /// Reuses precomputed unpersonalized reusability scores across cells.
    pub fn with_expect_scores(mut self, scores: Arc<Vec<f64>>) -> Self {
        if self.spec.strategy == Strategy::Expect {
            self.expect = Some(scores);
        }
        self
    }

    pub fn with_item_similarity(mut self, sim: Arc<dyn ItemSimilarity>) -> Self {
        self.item_similarity = Some(sim);
        self
    }

    pub fn spec(&self) -> &StrategySpec {
        &self.spec
    }

    pub fn train(&self) -> &Arc<RatingTable> {
        &self.train
    }

    pub fn ledger(&self) -> &UsageLedger {
        &self.ledger
    }

    pub fn into_ledger(self) -> UsageLedger {
        self.ledger
    }

    pub fn state(&self, target: UserId) -> Option<&NeighborhoodState> {
        self.states.get(&target)
    }

    pub fn states(&self) -> impl Iterator<Item = &NeighborhoodState> {
        self.states.values()
    }

    fn build_view(&self, target: UserId) -> Result<TargetView> {
        let similarities = self.similarity.similarity_row(target);
        let combined = self.spec.strategy.is_rank_combined();
        let similarity_ranks = combined.then(|| population_ranks(&similarities, target.index()));
        let reuse_ranks = match self.spec.strategy {
            Strategy::Expect => {
                let scores = self.expect.as_ref().expect("expect scores built in constructor");
                Some(population_ranks(scores, target.index()))
            }
            Strategy::Gain => Some(population_ranks(&gain_row(target, &self.train)?, target.index())),
            _ => None,
        };
        Ok(TargetView {
            target,
            similarities,
            similarity_ranks,
            reuse_ranks,
        })
    }

    fn ensure_view(&mut self, target: UserId) -> Result<()> {
        if self.view.as_ref().map(|v| v.target) != Some(target) {
            self.view = Some(self.build_view(target)?);
        }
        Ok(())
    }

    fn fallback_score(&self, target: UserId) -> f64 {
        self.train.user_mean(target).unwrap_or(self.global_mean)
    }

    /// Processes one rating query, updating the target's state and the ledger.
    pub fn query(&mut self, target: UserId, item: ItemId) -> Result<Prediction> {
        if target.index() >= self.train.num_users() || item.index() >= self.train.num_items() {
            return Err(Error::InvalidArgument(format!("query ({target}, {item}) outside the catalog")));
        }
        self.ensure_view(target)?;
        let num_users = self.train.num_users();
        let state = self
            .states
            .entry(target)
            .or_insert_with(|| NeighborhoodState::new(target, num_users));
        let view = self.view.as_ref().expect("view ensured above");

        let dynamic_ranks = if self.spec.strategy == Strategy::NeuKnnReuse {
            let item_sim = self.item_similarity.as_deref().ok_or_else(|| {
                Error::InvalidArgument("NeuKNN+Reuse needs item embeddings".into())
            })?;
            let reuse = neuknn_reusability_row(state, item, item_sim);
            Some(population_ranks(&reuse, target.index()))
        } else {
            None
        };

        let raters: Vec<UserId> = self.train.raters(item).iter().map(|&(u, _)| u).collect();
        let inputs = SelectionInputs {
            similarities: &view.similarities,
            similarity_ranks: view.similarity_ranks.as_deref(),
            reuse_ranks: dynamic_ranks.as_deref().or(view.reuse_ranks.as_deref()),
        };
        let chosen = select_neighbors(target, &raters, &self.spec, state, inputs, &mut self.tie_rng)?;

        let scale = self.train.scale();
        let served: Vec<ServedNeighbor> = chosen
            .iter()
            .map(|c| {
                let truth = self
                    .train
                    .rating(c.user, item)
                    .expect("selected neighbors rated the item");
                let out = self.ledger.charge(c.user, truth, scale, &mut self.dp_rng);
                ServedNeighbor {
                    user: c.user,
                    similarity: c.similarity,
                    served: out.served,
                    protected: out.protected,
                    perturbed: out.was_perturbed,
                }
            })
            .collect();
        state.record(item, chosen.iter().map(|c| c.user).collect());
        let fallback = self.fallback_score(target);
        Ok(predict(target, item, served, fallback))
    }

    /// Runs a target's queries in order.
    pub fn process_query_stream(&mut self, target: UserId, queries: &[ItemId]) -> Result<Vec<Prediction>> {
        queries.iter().map(|&item| self.query(target, item)).collect()
    }
}
