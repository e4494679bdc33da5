use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::path::Path;

use super::config::{Metric, MetricKind};
use super::run::CellOutput;
use crate::dataset::UserId;
use crate::error::{Error, Result};

/// Metric values of one (fold, method, k) cell, keyed by external user id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CellValues {
    pub user: BTreeMap<Metric, Vec<(String, f64)>>,
    /// Per-user values by query count q.
    pub query: BTreeMap<Metric, BTreeMap<usize, Vec<(String, f64)>>>,
    /// NaN marks an undefined value.
    pub scalar: BTreeMap<Metric, f64>,
}

impl CellValues {
    pub fn user_values(&self, metric: Metric) -> Vec<f64> {
        self.user.get(&metric).map_or_else(Vec::new, |v| v.iter().map(|p| p.1).collect())
    }

    /// Per-user values at query count `q`.
    pub fn query_values(&self, metric: Metric, q: usize) -> Vec<f64> {
        self.query
            .get(&metric)
            .and_then(|by_q| by_q.get(&q))
            .map_or_else(Vec::new, |v| v.iter().map(|p| p.1).collect())
    }

    pub fn max_q(&self, metric: Metric) -> usize {
        self.query
            .get(&metric)
            .and_then(|by_q| by_q.keys().next_back().copied())
            .unwrap_or(0)
    }
}

/// Cells addressed by `(fold, method name, k)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultSet {
    pub num_items: usize,
    pub cells: BTreeMap<(usize, String, usize), CellValues>,
}

impl ResultSet {
    pub fn from_cells(cells: &[CellOutput], num_items: usize, name: impl Fn(UserId) -> String) -> Self {
        let mut set = ResultSet {
            num_items,
            cells: BTreeMap::new(),
        };
        for c in cells {
            let r = &c.report;
            let mut v = CellValues::default();
            let named = |pairs: &[(UserId, f64)]| pairs.iter().map(|&(u, x)| (name(u), x)).collect::<Vec<_>>();
            v.user.insert(Metric::Mae, named(&r.mae));
            v.user.insert(Metric::Ndcg, named(&r.ndcg));
            v.user.insert(Metric::PrivacyRisk, named(&r.privacy_risk));
            let mut neighbors: BTreeMap<usize, Vec<(String, f64)>> = BTreeMap::new();
            for (u, curve) in &r.neighbors {
                for (q, &n) in curve.iter().enumerate() {
                    neighbors.entry(q + 1).or_default().push((name(*u), n as f64));
                }
            }
            let mut coratings: BTreeMap<usize, Vec<(String, f64)>> = BTreeMap::new();
            for (u, curve) in &r.coratings {
                for (q, &c) in curve.iter().enumerate() {
                    coratings.entry(q + 1).or_default().push((name(*u), c));
                }
            }
            v.query.insert(Metric::Neighbors, neighbors);
            v.query.insert(Metric::Coratings, coratings);
            v.scalar.insert(Metric::Vulnerable, r.vulnerable_fraction);
            v.scalar.insert(Metric::PpCorr, r.pp_corr.unwrap_or(f64::NAN));
            v.scalar.insert(Metric::Coverage, r.coverage);
            set.cells.insert((c.key.fold, c.key.method.to_string(), c.key.k), v);
        }
        set
    }

    pub fn get(&self, fold: usize, method: &str, k: usize) -> Option<&CellValues> {
        self.cells.get(&(fold, method.to_string(), k))
    }

    /// Folds that hold a cell for `(method, k)`.
    pub fn folds(&self, method: &str, k: usize) -> BTreeSet<usize> {
        self.cells
            .keys()
            .filter(|(_, m, kk)| m == method && *kk == k)
            .map(|(f, _, _)| *f)
            .collect()
    }

    /// Reads the metric CSVs of a run directory. Values carry the files'
    /// six significant digits.
    pub fn load(dir: &Path, num_items: usize) -> Result<Self> {
        let mut set = ResultSet {
            num_items,
            cells: BTreeMap::new(),
        };
        for metric in Metric::ALL {
            let path = dir.join(metric.file_name());
            if !path.exists() {
                continue;
            }
            let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
            let mut reader = csv::Reader::from_reader(file);
            for (n, rec) in reader.records().enumerate() {
                let rec = rec?;
                let line = n + 2;
                let bad = |message: String| Error::Parse {
                    path: path.clone(),
                    line,
                    message,
                };
                let field = |i: usize| rec.get(i).ok_or_else(|| bad(format!("missing column {i}")));
                let int = |i: usize| -> Result<usize> {
                    let f = field(i)?;
                    f.parse().map_err(|_| bad(format!("bad integer {f:?}")))
                };
                let num = |i: usize| -> Result<f64> {
                    let f = field(i)?;
                    f.parse().map_err(|_| bad(format!("bad number {f:?}")))
                };
                let key = (int(0)?, field(1)?.to_string(), int(2)?);
                let cell = set.cells.entry(key).or_default();
                match metric.kind() {
                    MetricKind::Query => cell
                        .query
                        .entry(metric)
                        .or_default()
                        .entry(int(3)?)
                        .or_default()
                        .push((field(4)?.to_string(), num(5)?)),
                    MetricKind::User => cell.user.entry(metric).or_default().push((field(3)?.to_string(), num(4)?)),
                    MetricKind::Correlation | MetricKind::Fold => {
                        cell.scalar.insert(metric, num(3)?);
                    }
                }
            }
        }
        Ok(set)
    }
}
