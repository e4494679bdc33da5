use std::fs;
use std::path::{Path, PathBuf};

use super::config::Metric;
use super::format::{fmt_epsilon, fmt_num};
use super::manifest::{blob_hash, FileEntry, MANIFEST_FILE};
use super::run::RunOutcome;
use crate::dataset::UserId;
use crate::error::{Error, Result};

pub const SUMMARY_FILE: &str = "summary.csv";
pub const SIGNIFICANCE_FILE: &str = "significance.json";
pub const LEDGER_DIR: &str = "ledgers";

struct Sink {
    root: PathBuf,
    files: Vec<FileEntry>,
}

impl Sink {
    fn put(&mut self, rel: &str, bytes: Vec<u8>) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
        self.files.push(FileEntry {
            path: rel.to_string(),
            bytes: bytes.len() as u64,
            sha256: blob_hash(&bytes),
        });
        Ok(())
    }
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| Error::Config(format!("csv buffer: {e}")))
}

/// File name of a cell's ledger, relative to the run directory.
pub fn ledger_file(fold: usize, method: &str, k: usize) -> String {
    format!("{LEDGER_DIR}/fold{fold}_{method}_k{k}.csv")
}

/// Writes metric CSVs, the per-cell summary, ledgers, significance results
/// and finally the manifest listing all of them.
pub fn write_all(dir: &Path, outcome: &mut RunOutcome) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut sink = Sink {
        root: dir.to_path_buf(),
        files: Vec::new(),
    };
    let catalog = outcome.catalog.clone();
    let name = |u: UserId| catalog.user_name(u).to_string();
    let selected = &outcome.manifest.config.metrics;
    let cells = &outcome.cells;
    let head = |c: &super::run::CellOutput| vec![c.key.fold.to_string(), c.key.method.to_string(), c.key.k.to_string()];

    for &metric in selected {
        let bytes = match metric {
            Metric::Neighbors | Metric::Coratings => {
                let rows = cells.iter().flat_map(|c| {
                    let curves: Vec<(UserId, Vec<f64>)> = if metric == Metric::Neighbors {
                        c.report.neighbors.iter().map(|(u, v)| (*u, v.iter().map(|&n| n as f64).collect())).collect()
                    } else {
                        c.report.coratings.clone()
                    };
                    let head = head(c);
                    curves.into_iter().flat_map(move |(u, curve)| {
                        let head = head.clone();
                        let id = name(u);
                        curve.into_iter().enumerate().map(move |(q, v)| {
                            let mut r = head.clone();
                            r.extend([(q + 1).to_string(), id.clone(), fmt_num(v)]);
                            r
                        })
                    })
                });
                csv_bytes(&["fold", "method", "k", "q", "user_id", "value"], rows)?
            }
            Metric::Mae | Metric::Ndcg | Metric::PrivacyRisk => {
                let rows = cells.iter().flat_map(|c| {
                    let values = match metric {
                        Metric::Mae => &c.report.mae,
                        Metric::Ndcg => &c.report.ndcg,
                        _ => &c.report.privacy_risk,
                    };
                    let head = head(c);
                    values.iter().map(move |&(u, v)| {
                        let mut r = head.clone();
                        r.extend([name(u), fmt_num(v)]);
                        r
                    })
                });
                csv_bytes(&["fold", "method", "k", "user_id", "value"], rows)?
            }
            Metric::Vulnerable | Metric::PpCorr | Metric::Coverage => {
                let rows = cells.iter().map(|c| {
                    let v = match metric {
                        Metric::Vulnerable => c.report.vulnerable_fraction,
                        Metric::PpCorr => c.report.pp_corr.unwrap_or(f64::NAN),
                        _ => c.report.coverage,
                    };
                    let mut r = head(c);
                    r.push(fmt_num(v));
                    r
                });
                csv_bytes(&["fold", "method", "k", "value"], rows)?
            }
        };
        sink.put(&metric.file_name(), bytes)?;
    }

    let summary = cells.iter().map(|c| {
        let r = &c.report;
        let opt = |x: Option<f64>| fmt_num(x.unwrap_or(f64::NAN));
        let mut row = head(c);
        row.extend([
            fmt_num(r.tau),
            opt(r.mean_mae()),
            opt(r.mean_ndcg()),
            opt(r.mean_privacy_risk()),
            fmt_num(r.vulnerable_fraction),
            opt(r.pp_corr),
            fmt_num(r.coverage),
        ]);
        row
    });
    sink.put(
        SUMMARY_FILE,
        csv_bytes(
            &["fold", "method", "k", "tau", "mae", "ndcg", "privacy_risk", "vulnerable", "pp_corr", "coverage"],
            summary,
        )?,
    )?;

    for c in cells {
        let ledger = &c.ledger;
        let rows = (0..ledger.num_users() as u32).map(UserId).map(|u| {
            vec![
                name(u),
                ledger.data_usage(u).to_string(),
                fmt_num(ledger.privacy_risk(u)),
                fmt_epsilon(ledger.epsilon(u).ok()),
                (ledger.is_vulnerable(u) as u8).to_string(),
            ]
        });
        let bytes = csv_bytes(&["user_id", "data_usage", "privacy_risk", "epsilon", "vulnerable"], rows)?;
        sink.put(&ledger_file(c.key.fold, &c.key.method.to_string(), c.key.k), bytes)?;
    }

    sink.put(SIGNIFICANCE_FILE, serde_json::to_vec_pretty(&outcome.significance)?)?;

    outcome.manifest.files = sink.files;
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, serde_json::to_vec_pretty(&outcome.manifest)?).map_err(|e| Error::io(&path, e))?;
    Ok(())
}
