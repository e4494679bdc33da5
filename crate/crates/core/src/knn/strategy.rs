use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Neighbor-selection strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    /// Top-k raters by cosine similarity.
    #[serde(rename = "UserKNN")]
    UserKnn,
    /// Previous neighbors who rated the item first, then the most similar
    /// new raters.
    #[serde(rename = "UserKNN+Reuse")]
    UserKnnReuse,
    /// Similarity rank plus rank of summed item popularity.
    Expect,
    /// Similarity rank plus rank of profile-overlap fraction.
    Gain,
    /// Top-k raters by user-embedding cosine.
    #[serde(rename = "NeuKNN")]
    NeuKnn,
    /// Embedding-similarity rank plus rank of item-similarity-weighted past
    /// servings.
    #[serde(rename = "NeuKNN+Reuse")]
    NeuKnnReuse,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::UserKnn,
        Strategy::UserKnnReuse,
        Strategy::Expect,
        Strategy::Gain,
        Strategy::NeuKnn,
        Strategy::NeuKnnReuse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::UserKnn => "UserKNN",
            Strategy::UserKnnReuse => "UserKNN+Reuse",
            Strategy::Expect => "Expect",
            Strategy::Gain => "Gain",
            Strategy::NeuKnn => "NeuKNN",
            Strategy::NeuKnnReuse => "NeuKNN+Reuse",
        }
    }

    /// Ranks candidates by similarity rank + reusability rank.
    pub fn is_rank_combined(self) -> bool {
        matches!(self, Strategy::Expect | Strategy::Gain | Strategy::NeuKnnReuse)
    }

    pub fn uses_embeddings(self) -> bool {
        matches!(self, Strategy::NeuKnn | Strategy::NeuKnnReuse)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown strategy '{s}'")))
    }
}

/// How neighbor ratings are protected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DpMode {
    /// Real ratings always.
    #[default]
    None,
    /// Real ratings for the first tau servings of each user, randomized
    /// response afterwards.
    Threshold,
    /// Randomized response for every serving.
    Full,
}

impl DpMode {
    pub fn suffix(self) -> &'static str {
        match self {
            DpMode::None => "",
            DpMode::Threshold => "_DP",
            DpMode::Full => "_full_DP",
        }
    }
}

impl FromStr for DpMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" | "off" => Ok(DpMode::None),
            "threshold" | "dp" => Ok(DpMode::Threshold),
            "full" => Ok(DpMode::Full),
            other => Err(Error::InvalidArgument(format!("unknown dp mode '{other}'"))),
        }
    }
}

/// A strategy under a DP mode, e.g. `Gain_DP` or `UserKNN_full_DP`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Method {
    pub strategy: Strategy,
    pub dp: DpMode,
}

impl Method {
    pub fn new(strategy: Strategy, dp: DpMode) -> Self {
        Self { strategy, dp }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.strategy, self.dp.suffix())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (base, dp) = if let Some(b) = s.strip_suffix("_full_DP") {
            (b, DpMode::Full)
        } else if let Some(b) = s.strip_suffix("_DP") {
            (b, DpMode::Threshold)
        } else {
            (s, DpMode::None)
        };
        Ok(Method::new(base.parse()?, dp))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategySpec {
    pub strategy: Strategy,
    pub k: usize,
    pub dp: DpMode,
    /// Data-usage threshold; consulted for classification in every mode and
    /// for protection in threshold mode. Full mode treats it as 0.
    pub tau: f64,
    pub seed: u64,
}

impl StrategySpec {
    pub fn new(strategy: Strategy, k: usize) -> Self {
        Self {
            strategy,
            k,
            dp: DpMode::None,
            tau: f64::INFINITY,
            seed: 0,
        }
    }

    pub fn with_dp(mut self, dp: DpMode, tau: f64) -> Self {
        self.dp = dp;
        self.tau = tau;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn method(&self) -> Method {
        Method::new(self.strategy, self.dp)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidArgument("k must be >= 1".into()));
        }
        if self.tau.is_nan() || self.tau < 0.0 {
            return Err(Error::InvalidArgument(format!("tau must be >= 0, got {}", self.tau)));
        }
        Ok(())
    }
}
