use serde::{Deserialize, Serialize};

use super::accuracy::mae_at_k;
use super::neighborhood::{coratings_curve, neighbors_curve};
use super::popularity::{coverage, pp_corr};
use super::topn::ndcg_at_10;
use super::trace::QueryTrace;
use crate::dataset::{RatingTable, UserId};
use crate::error::{Error, Result};
use crate::privacy::UsageLedger;

/// All metrics of one (fold, method, k) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub fold: usize,
    pub method: String,
    pub k: usize,
    pub tau: f64,
    /// Per traced user with at least one test query.
    pub mae: Vec<(UserId, f64)>,
    /// Per traced user with at least one relevant test item.
    pub ndcg: Vec<(UserId, f64)>,
    /// Per user of the id space.
    pub privacy_risk: Vec<(UserId, f64)>,
    pub neighbors: Vec<(UserId, Vec<usize>)>,
    pub coratings: Vec<(UserId, Vec<f64>)>,
    /// |V| / |U|.
    pub vulnerable_fraction: f64,
    /// `None` when undefined (constant frequencies or popularity).
    pub pp_corr: Option<f64>,
    pub coverage: f64,
}

impl MetricReport {
    pub fn compute(
        fold: usize,
        method: impl Into<String>,
        k: usize,
        trace: &QueryTrace,
        train: &RatingTable,
        ledger: &UsageLedger,
    ) -> Result<Self> {
        let relevance = train.global_mean().ok_or(Error::EmptyTable)?;
        let users: Vec<UserId> = trace.users().collect();
        let pp = match pp_corr(trace, train) {
            Ok(r) => Some(r),
            Err(Error::Undefined(_)) => None,
            Err(e) => return Err(e),
        };
        let everyone = (0..ledger.num_users() as u32).map(UserId);
        let (vulnerable, _) = ledger.classify();
        Ok(Self {
            fold,
            method: method.into(),
            k,
            tau: ledger.tau(),
            mae: users.iter().filter_map(|&u| mae_at_k(trace, u).map(|m| (u, m))).collect(),
            ndcg: users
                .iter()
                .filter_map(|&u| ndcg_at_10(trace, u, relevance).map(|m| (u, m)))
                .collect(),
            privacy_risk: everyone.map(|u| (u, ledger.privacy_risk(u))).collect(),
            neighbors: users.iter().map(|&u| (u, neighbors_curve(trace, u))).collect(),
            coratings: users.iter().map(|&u| (u, coratings_curve(trace, train, u))).collect(),
            vulnerable_fraction: vulnerable.len() as f64 / ledger.num_users().max(1) as f64,
            pp_corr: pp,
            coverage: if train.num_items() == 0 {
                0.0
            } else {
                coverage(trace, train.num_items())
            },
        })
    }

    pub fn mean_mae(&self) -> Option<f64> {
        super::mean(self.mae.iter().map(|p| p.1))
    }

    pub fn mean_ndcg(&self) -> Option<f64> {
        super::mean(self.ndcg.iter().map(|p| p.1))
    }

    pub fn mean_privacy_risk(&self) -> Option<f64> {
        super::mean(self.privacy_risk.iter().map(|p| p.1))
    }

    /// Per-user Neighbors@q for users with at least `q` queries.
    pub fn neighbors_at(&self, q: usize) -> Vec<f64> {
        at_q(&self.neighbors, q, |&n| n as f64)
    }

    /// Per-user CoRatings@q for users with at least `q` queries.
    pub fn coratings_at(&self, q: usize) -> Vec<f64> {
        at_q(&self.coratings, q, |&c| c)
    }

    pub fn max_q(&self) -> usize {
        self.neighbors.iter().map(|(_, c)| c.len()).max().unwrap_or(0)
    }
}

fn at_q<T>(curves: &[(UserId, Vec<T>)], q: usize, f: impl Fn(&T) -> f64) -> Vec<f64> {
    if q == 0 {
        return Vec::new();
    }
    curves.iter().filter_map(|(_, c)| c.get(q - 1).map(&f)).collect()
}
