//! Data-usage accounting, randomized-response perturbation, privacy-risk and
//! epsilon reporting, and threshold estimation.

mod epsilon;
mod ledger;
mod mechanism;
mod tau;

pub use epsilon::{epsilon_bounds, epsilon_closed_form, Epsilon};
pub use ledger::UsageLedger;
pub use mechanism::{random_rating, randomized_response, CoinTrace, DpOutcome, KEEP_PROBABILITY};
pub use tau::{estimate_tau, TauEstimator};
