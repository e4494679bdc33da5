//! Rating ingestion, cross-validation splits, synthetic fixtures and
//! descriptive statistics.

mod io;
mod scale;
mod split;
mod stats;
mod synth;
mod table;

pub use io::{load_ratings, read_ratings, write_ratings, write_ratings_to, DuplicatePolicy, RatingFormat};
pub use scale::RatingScale;
pub use split::{split_folds, FoldSplit, MIN_RATINGS_FOR_TEST, NUM_FOLDS};
pub use stats::{describe, DatasetStats, TOP_PROFILE_FRACTION};
pub use synth::{synth_dataset, Skew, SynthSpec};
pub use table::{Catalog, ItemId, RatingTable, UserId};
