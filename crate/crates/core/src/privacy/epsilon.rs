use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Privacy parameter in nats. "No DP applied" is a distinct variant rather
/// than a float overflow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Epsilon {
    Finite(f64),
    Infinite,
}

impl Epsilon {
    pub fn as_f64(self) -> f64 {
        match self {
            Epsilon::Finite(e) => e,
            Epsilon::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Epsilon::Finite(_))
    }
}

impl fmt::Display for Epsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Epsilon::Finite(e) => write!(f, "{e}"),
            Epsilon::Infinite => f.write_str("inf"),
        }
    }
}

/// `ln(3 + 4 * risk / (usage - risk))` for a user whose `usage` servings
/// split into `risk` real and `usage - risk` randomized-response servings.
pub fn epsilon_closed_form(data_usage: f64, privacy_risk: f64) -> Result<Epsilon> {
    if !(data_usage > 0.0) || privacy_risk < 0.0 || privacy_risk >= data_usage {
        return Err(Error::InvalidArgument(format!(
            "closed-form epsilon needs 0 <= risk < usage, got risk {privacy_risk}, usage {data_usage}"
        )));
    }
    Ok(Epsilon::Finite(
        (3.0 + 4.0 * privacy_risk / (data_usage - privacy_risk)).ln(),
    ))
}

/// Bracket on a vulnerable user's epsilon for a given usage, obtained by
/// letting the real-serving count range over `1..=usage-1`.
pub fn epsilon_bounds(data_usage: u64) -> Option<(f64, f64)> {
    if data_usage < 2 {
        return None;
    }
    let d = data_usage as f64;
    Some(((3.0 + 4.0 / (d - 1.0)).ln(), (3.0 + 4.0 * (d - 1.0)).ln()))
}
