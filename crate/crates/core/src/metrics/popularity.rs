use std::collections::BTreeSet;

use super::topn::{top_n, TOP_N};
use super::trace::QueryTrace;
use crate::dataset::{ItemId, RatingTable};
use crate::error::{Error, Result};

/// Pearson correlation, two-pass. Undefined for fewer than two points or a
/// constant input.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!("lengths {} and {} differ", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::Undefined("correlation needs at least two points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined("correlation of a constant series".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// ItemFreq+(i): number of traced users with `i` in their top-10 set,
/// indexed by item.
pub fn item_frequencies(trace: &QueryTrace, num_items: usize) -> Vec<f64> {
    let mut freq = vec![0.0; num_items];
    for u in trace.users() {
        for i in top_n(trace, u, TOP_N) {
            freq[i.index()] += 1.0;
        }
    }
    freq
}

/// ItemPop(i) = |U_i| / |U| in the training set.
pub fn item_popularity(train: &RatingTable) -> Vec<f64> {
    let users = train.num_users() as f64;
    train.items().map(|i| train.raters(i).len() as f64 / users).collect()
}

/// PP-Corr@k over every catalog item, top-set absentees included with
/// frequency 0.
pub fn pp_corr(trace: &QueryTrace, train: &RatingTable) -> Result<f64> {
    pearson(&item_frequencies(trace, train.num_items()), &item_popularity(train))
}

/// Coverage@k: share of catalog items in at least one top-10 set.
pub fn coverage(trace: &QueryTrace, num_items: usize) -> f64 {
    let union: BTreeSet<ItemId> = trace.users().flat_map(|u| top_n(trace, u, TOP_N)).collect();
    union.len() as f64 / num_items as f64
}
