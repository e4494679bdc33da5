//! Evaluation metrics over query traces, top-N lists and the significance
//! tests behind method comparisons.

mod accuracy;
mod neighborhood;
mod popularity;
mod report;
mod stats;
mod topn;
mod trace;

pub use accuracy::{mae_at_k, mean_mae};
pub use neighborhood::{corated, coratings_at_q, coratings_curve, neighbors_at_q, neighbors_curve};
pub use popularity::{coverage, item_frequencies, item_popularity, pearson, pp_corr};
pub use report::MetricReport;
pub use stats::{corr_z_test, mann_whitney, midranks, u_statistic, Tail, TestResult, DEFAULT_ALPHA, EXACT_LIMIT};
pub use topn::{ndcg_at_10, ndcg_at_n, top_n, TOP_N};
pub use trace::{QueryTrace, TraceEntry};

/// Arithmetic mean; `None` for an empty input.
pub fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values {
        sum += v;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}
