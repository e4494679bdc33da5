//! Similarity, neighbor selection strategies, per-target neighborhood state
//! and rating estimation.

mod engine;
mod predict;
mod ranking;
mod reusability;
mod select;
mod similarity;
mod state;
mod strategy;

pub use engine::QueryEngine;
pub use predict::{predict, Prediction, ServedNeighbor};
pub use ranking::{population_ranks, rank_scores, rank_values};
pub use reusability::{expect_scores, gain_row, gain_score, overlap_counts};
pub use select::{select_neighbors, Candidate, SelectionInputs};
pub use similarity::{ItemSimilarity, SimilarityIndex, UserSimilarity};
pub use state::NeighborhoodState;
pub use strategy::{DpMode, Method, Strategy, StrategySpec};
