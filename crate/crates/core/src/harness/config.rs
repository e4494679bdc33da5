use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{
    load_ratings, split_folds, synth_dataset, DuplicatePolicy, RatingFormat, RatingScale, RatingTable, SynthSpec,
    NUM_FOLDS,
};
use crate::embeddings::TrainConfig;
use crate::error::{Error, Result};
use crate::knn::{DpMode, Method, Strategy};
use crate::metrics::{Tail, DEFAULT_ALPHA};

pub const DEFAULT_K: [usize; 6] = [5, 10, 15, 20, 25, 30];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DatasetSource {
    File {
        path: PathBuf,
        #[serde(default = "default_format")]
        format: RatingFormat,
        /// Scale literal such as `1..5`, `[0,10]` or `{0.5,1,1.5}`.
        scale: String,
        #[serde(default)]
        duplicates: DuplicatePolicy,
    },
    Synthetic(SynthSpec),
}

fn default_format() -> RatingFormat {
    RatingFormat::Csv
}

impl DatasetSource {
    /// Relative file paths resolve against `base`.
    pub fn load(&self, base: &Path) -> Result<RatingTable> {
        match self {
            DatasetSource::File {
                path,
                format,
                scale,
                duplicates,
            } => {
                let scale: RatingScale = scale.parse()?;
                load_ratings(base.join(path), *format, &scale, *duplicates)
            }
            DatasetSource::Synthetic(spec) => synth_dataset(spec),
        }
    }
}

/// Threshold for threshold-mode DP and for classifying vulnerable users.
#[derive(Debug, Clone, PartialEq)]
pub enum TauSetting {
    /// Estimated per (fold, k) from the usage distribution of plain UserKNN.
    Estimate,
    Fixed(f64),
    PerK(BTreeMap<usize, f64>),
}

impl Serialize for TauSetting {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            TauSetting::Estimate => s.serialize_str("estimate"),
            TauSetting::Fixed(t) => s.serialize_f64(*t),
            TauSetting::PerK(map) => {
                let m: BTreeMap<String, f64> = map.iter().map(|(k, v)| (k.to_string(), *v)).collect();
                m.serialize(s)
            }
        }
    }
}

impl<'de> Deserialize<'de> for TauSetting {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
            Map(BTreeMap<String, f64>),
        }
        use serde::de::Error as _;
        match Raw::deserialize(d)? {
            Raw::Number(t) => Ok(TauSetting::Fixed(t)),
            Raw::Text(s) if s.eq_ignore_ascii_case("estimate") => Ok(TauSetting::Estimate),
            Raw::Text(s) => Err(D::Error::custom(format!("tau must be a number, a table by k or \"estimate\", got {s:?}"))),
            Raw::Map(m) => m
                .into_iter()
                .map(|(k, v)| k.parse::<usize>().map(|k| (k, v)).map_err(|_| D::Error::custom(format!("bad k {k:?}"))))
                .collect::<std::result::Result<_, _>>()
                .map(TauSetting::PerK),
        }
    }
}

impl Default for TauSetting {
    fn default() -> Self {
        TauSetting::Estimate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    Neighbors,
    Coratings,
    Mae,
    Ndcg,
    PrivacyRisk,
    Vulnerable,
    PpCorr,
    Coverage,
}

/// How a metric's values are grouped for testing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    /// Per user, at every query count q.
    Query,
    /// Per user, after the whole stream.
    User,
    /// One correlation per fold.
    Correlation,
    /// One value per fold.
    Fold,
}

impl Metric {
    pub const ALL: [Metric; 8] = [
        Metric::Neighbors,
        Metric::Coratings,
        Metric::Mae,
        Metric::Ndcg,
        Metric::PrivacyRisk,
        Metric::Vulnerable,
        Metric::PpCorr,
        Metric::Coverage,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Neighbors => "neighbors",
            Metric::Coratings => "coratings",
            Metric::Mae => "mae",
            Metric::Ndcg => "ndcg",
            Metric::PrivacyRisk => "privacy_risk",
            Metric::Vulnerable => "vulnerable",
            Metric::PpCorr => "pp_corr",
            Metric::Coverage => "coverage",
        }
    }

    pub fn kind(self) -> MetricKind {
        match self {
            Metric::Neighbors | Metric::Coratings => MetricKind::Query,
            Metric::Mae | Metric::Ndcg | Metric::PrivacyRisk => MetricKind::User,
            Metric::PpCorr => MetricKind::Correlation,
            Metric::Vulnerable | Metric::Coverage => MetricKind::Fold,
        }
    }

    /// Name of the CSV file holding this metric.
    pub fn file_name(self) -> String {
        format!("{}.csv", self.name())
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == norm)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown metric '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificancePair {
    pub a: String,
    pub b: String,
    pub metric: Metric,
    #[serde(default = "default_tail")]
    pub tail: Tail,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

fn default_tail() -> Tail {
    Tail::TwoSided
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    #[serde(default)]
    pub strategies: Vec<Strategy>,
    #[serde(default = "default_dp")]
    pub dp: Vec<DpMode>,
    /// Extra methods by name, e.g. `Gain_DP` or `UserKNN_full_DP`.
    #[serde(default)]
    pub methods: Vec<String>,
    #[serde(default = "default_k")]
    pub k: Vec<usize>,
    #[serde(default)]
    pub tau: TauSetting,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_folds")]
    pub folds: Vec<usize>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<Metric>,
    #[serde(default)]
    pub significance: Vec<SignificancePair>,
    #[serde(default)]
    pub embeddings: TrainConfig,
    /// Worker threads; 0 picks the machine default.
    #[serde(default)]
    pub threads: usize,
}

fn default_dp() -> Vec<DpMode> {
    vec![DpMode::None]
}

fn default_k() -> Vec<usize> {
    DEFAULT_K.to_vec()
}

fn default_folds() -> Vec<usize> {
    (0..NUM_FOLDS).collect()
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

fn default_metrics() -> Vec<Metric> {
    Metric::ALL.to_vec()
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Quick config over a synthetic dataset.
    pub fn synthetic(spec: SynthSpec, methods: &[Method], k: &[usize]) -> Self {
        Self {
            dataset: DatasetSource::Synthetic(spec),
            strategies: Vec::new(),
            dp: default_dp(),
            methods: methods.iter().map(|m| m.to_string()).collect(),
            k: k.to_vec(),
            tau: TauSetting::Estimate,
            seed: 0,
            folds: default_folds(),
            output: default_output(),
            metrics: default_metrics(),
            significance: Vec::new(),
            embeddings: TrainConfig::default(),
            threads: 0,
        }
    }

    /// strategies × dp modes followed by the explicit methods, without
    /// repeats.
    pub fn method_list(&self) -> Result<Vec<Method>> {
        let mut out: Vec<Method> = Vec::new();
        for &s in &self.strategies {
            for &d in &self.dp {
                let m = Method::new(s, d);
                if !out.contains(&m) {
                    out.push(m);
                }
            }
        }
        for name in &self.methods {
            let m: Method = name.parse()?;
            if !out.contains(&m) {
                out.push(m);
            }
        }
        Ok(out)
    }

    /// Explicit threshold for `k`, or `None` when it is to be estimated.
    pub fn fixed_tau(&self, k: usize) -> Result<Option<f64>> {
        match &self.tau {
            TauSetting::Estimate => Ok(None),
            TauSetting::Fixed(t) => Ok(Some(*t)),
            TauSetting::PerK(map) => map
                .get(&k)
                .copied()
                .map(Some)
                .ok_or_else(|| Error::Config(format!("no tau given for k = {k}"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let methods = self.method_list()?;
        if methods.is_empty() {
            return Err(Error::Config("at least one strategy or method is required".into()));
        }
        if self.k.is_empty() || self.k.contains(&0) {
            return Err(Error::Config("k needs at least one value, all >= 1".into()));
        }
        if self.folds.is_empty() || self.folds.iter().any(|&f| f >= NUM_FOLDS) {
            return Err(Error::Config(format!("folds must be a non-empty subset of 0..{NUM_FOLDS}")));
        }
        for &k in &self.k {
            if let Some(t) = self.fixed_tau(k)? {
                if t.is_nan() || t < 0.0 {
                    return Err(Error::Config(format!("tau must be >= 0, got {t}")));
                }
            }
        }
        if self.metrics.is_empty() {
            return Err(Error::Config("no metrics selected".into()));
        }
        for pair in &self.significance {
            for name in [&pair.a, &pair.b] {
                let m: Method = name.parse()?;
                if !methods.contains(&m) {
                    return Err(Error::Config(format!("significance pair names {name}, which is not run")));
                }
            }
            if !self.metrics.contains(&pair.metric) {
                return Err(Error::Config(format!("significance pair tests {}, which is not computed", pair.metric)));
            }
            if !(pair.alpha > 0.0 && pair.alpha < 1.0) {
                return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", pair.alpha)));
            }
        }
        self.embeddings.validate()?;
        Ok(())
    }
}

/// Loads the dataset and its folds.
pub fn prepare(config: &ExperimentConfig, base: &Path) -> Result<(RatingTable, Vec<crate::dataset::FoldSplit>)> {
    let table = config.dataset.load(base)?;
    if table.is_empty() {
        return Err(Error::EmptyTable);
    }
    let folds = split_folds(&table, config.seed)?;
    Ok((table, folds))
}
