use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::epsilon::{epsilon_closed_form, Epsilon};
use super::mechanism::{randomized_response, DpOutcome};
use crate::dataset::{RatingScale, UserId};
use crate::error::{Error, Result};
use crate::knn::DpMode;

/// Global per-user record of how often each user's ratings were served.
///
/// In threshold mode a user's first `floor(tau)` servings are real and every
/// later serving goes through randomized response, so a user is vulnerable
/// (usage > tau) exactly when at least one serving was protected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsageLedger {
    mode: DpMode,
    tau: f64,
    usage: Vec<u64>,
    real: Vec<u64>,
}

impl UsageLedger {
    /// `tau` is kept for classification in every mode; full mode treats it as
    /// zero.
    pub fn new(num_users: usize, mode: DpMode, tau: f64) -> Result<Self> {
        if tau.is_nan() || tau < 0.0 {
            return Err(Error::InvalidArgument(format!("tau must be >= 0, got {tau}")));
        }
        Ok(Self {
            mode,
            tau,
            usage: vec![0; num_users],
            real: vec![0; num_users],
        })
    }

    pub fn mode(&self) -> DpMode {
        self.mode
    }

    pub fn num_users(&self) -> usize {
        self.usage.len()
    }

    /// Threshold in effect for classification and risk.
    pub fn tau(&self) -> f64 {
        match self.mode {
            DpMode::Full => 0.0,
            _ => self.tau,
        }
    }

    fn real_limit(&self) -> u64 {
        match self.mode {
            DpMode::None => u64::MAX,
            DpMode::Full => 0,
            DpMode::Threshold if self.tau.is_infinite() => u64::MAX,
            DpMode::Threshold => self.tau.floor() as u64,
        }
    }

    /// Serves one rating of `neighbor` and records the serving.
    pub fn charge<R: RngCore + ?Sized>(
        &mut self,
        neighbor: UserId,
        true_rating: f64,
        scale: &RatingScale,
        rng: &mut R,
    ) -> DpOutcome {
        let u = neighbor.index();
        self.usage[u] += 1;
        if self.real[u] < self.real_limit() {
            self.real[u] += 1;
            DpOutcome::real(true_rating)
        } else {
            randomized_response(true_rating, scale, rng)
        }
    }

    /// The same counts judged against another threshold. Only ledgers that
    /// never perturb can be re-anchored without changing what was served.
    pub fn reclassified(mut self, tau: f64) -> Result<Self> {
        if self.mode != DpMode::None {
            return Err(Error::InvalidArgument("only a ledger without DP can be reclassified".into()));
        }
        if tau.is_nan() || tau < 0.0 {
            return Err(Error::InvalidArgument(format!("tau must be >= 0, got {tau}")));
        }
        self.tau = tau;
        Ok(self)
    }

    /// DataUsage@k(u).
    pub fn data_usage(&self, user: UserId) -> u64 {
        self.usage[user.index()]
    }

    pub fn usages(&self) -> &[u64] {
        &self.usage
    }

    /// Servings of `user` that bypassed the mechanism.
    pub fn real_servings(&self, user: UserId) -> u64 {
        self.real[user.index()]
    }

    pub fn total_servings(&self) -> u64 {
        self.usage.iter().sum()
    }

    pub fn is_vulnerable(&self, user: UserId) -> bool {
        self.data_usage(user) as f64 > self.tau()
    }

    /// Partition into vulnerable users (usage > tau) and secure users.
    pub fn classify(&self) -> (Vec<UserId>, Vec<UserId>) {
        (0..self.usage.len() as u32)
            .map(UserId)
            .partition(|&u| self.is_vulnerable(u))
    }

    /// PrivacyRisk@k(u): `min(tau, usage)` under DP, the raw usage without.
    pub fn privacy_risk(&self, user: UserId) -> f64 {
        let usage = self.data_usage(user) as f64;
        match self.mode {
            DpMode::None => usage,
            DpMode::Threshold => usage.min(self.tau),
            DpMode::Full => 0.0,
        }
    }

    pub fn epsilon(&self, user: UserId) -> Result<Epsilon> {
        let usage = self.data_usage(user);
        if usage == 0 {
            return Err(Error::UndefinedEpsilon(user.to_string()));
        }
        Ok(match self.mode {
            DpMode::None => Epsilon::Infinite,
            DpMode::Full => Epsilon::Finite(3f64.ln()),
            DpMode::Threshold if !self.is_vulnerable(user) => Epsilon::Infinite,
            DpMode::Threshold => epsilon_closed_form(usage as f64, self.privacy_risk(user))?,
        })
    }
}
