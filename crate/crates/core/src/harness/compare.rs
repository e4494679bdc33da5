use serde::{Deserialize, Serialize};

use super::config::{Metric, MetricKind};
use super::results::ResultSet;
use crate::error::{Error, Result};
use crate::metrics::{corr_z_test, mann_whitney, Tail, TestResult};

/// Query-based metrics are tested for q in [FIRST_Q, LAST_Q].
pub const FIRST_Q: usize = 2;
pub const LAST_Q: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryVerdict {
    pub q: usize,
    pub result: TestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub a: String,
    pub b: String,
    pub metric: Metric,
    pub k: usize,
    pub tail: Tail,
    pub alpha: f64,
    pub folds: Vec<usize>,
    /// Scalar-metric verdict; absent for query-based metrics.
    pub result: Option<TestResult>,
    /// Query-based verdicts, one per tested q.
    pub per_q: Vec<QueryVerdict>,
    /// Share of tested q that are significant.
    pub fraction_significant: Option<f64>,
}

impl Comparison {
    /// Significant for the scalar test, or at every tested q.
    pub fn significant(&self) -> bool {
        match &self.result {
            Some(r) => r.significant,
            None => !self.per_q.is_empty() && self.per_q.iter().all(|v| v.result.significant),
        }
    }
}

/// Tests method `a` against `b` on one metric at one k, fold by fold, and
/// joins the folds under the all-folds rule.
pub fn compare(results: &ResultSet, a: &str, b: &str, metric: Metric, k: usize, tail: Tail, alpha: f64) -> Result<Comparison> {
    let folds_a = results.folds(a, k);
    let folds_b = results.folds(b, k);
    if folds_a.is_empty() || folds_b.is_empty() {
        return Err(Error::Mismatch(format!("no results for {a} or {b} at k = {k}")));
    }
    if folds_a != folds_b {
        return Err(Error::Mismatch(format!("{a} covers folds {folds_a:?}, {b} covers {folds_b:?}")));
    }
    let folds: Vec<usize> = folds_a.into_iter().collect();
    let cell = |m: &str, f: usize| results.get(f, m, k).expect("fold listed above");
    let mut out = Comparison {
        a: a.to_string(),
        b: b.to_string(),
        metric,
        k,
        tail,
        alpha,
        folds: folds.clone(),
        result: None,
        per_q: Vec::new(),
        fraction_significant: None,
    };
    match metric.kind() {
        MetricKind::Query => {
            let max_q = folds
                .iter()
                .map(|&f| cell(a, f).max_q(metric).min(cell(b, f).max_q(metric)))
                .min()
                .unwrap_or(0)
                .min(LAST_Q);
            for q in FIRST_Q..=max_q {
                let per_fold: Option<Vec<TestResult>> = folds
                    .iter()
                    .map(|&f| {
                        let (xa, xb) = (cell(a, f).query_values(metric, q), cell(b, f).query_values(metric, q));
                        mann_whitney(&xa, &xb, tail, alpha).ok()
                    })
                    .collect();
                if let Some(per_fold) = per_fold {
                    out.per_q.push(QueryVerdict {
                        q,
                        result: TestResult::across_folds(&per_fold)?,
                    });
                }
            }
            if !out.per_q.is_empty() {
                let sig = out.per_q.iter().filter(|v| v.result.significant).count();
                out.fraction_significant = Some(sig as f64 / out.per_q.len() as f64);
            }
        }
        MetricKind::User => {
            let per_fold = folds
                .iter()
                .map(|&f| mann_whitney(&cell(a, f).user_values(metric), &cell(b, f).user_values(metric), tail, alpha))
                .collect::<Result<Vec<_>>>()?;
            out.result = Some(TestResult::across_folds(&per_fold)?);
        }
        MetricKind::Correlation => {
            let n = results.num_items;
            let per_fold = folds
                .iter()
                .map(|&f| {
                    let ra = cell(a, f).scalar.get(&metric).copied().unwrap_or(f64::NAN);
                    let rb = cell(b, f).scalar.get(&metric).copied().unwrap_or(f64::NAN);
                    corr_z_test(ra, n, rb, n, alpha)
                })
                .collect::<Result<Vec<_>>>()?;
            out.tail = Tail::TwoSided;
            out.result = Some(TestResult::across_folds(&per_fold)?);
        }
        MetricKind::Fold => {
            let values = |m: &str| -> Vec<f64> {
                folds
                    .iter()
                    .map(|&f| cell(m, f).scalar.get(&metric).copied().unwrap_or(f64::NAN))
                    .collect()
            };
            out.result = Some(mann_whitney(&values(a), &values(b), tail, alpha)?);
        }
    }
    Ok(out)
}
