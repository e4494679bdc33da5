use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Declared range of a rating column.
///
/// Discrete scales carry their permitted value set; continuous scales accept
/// anything in `[min, max]`. The randomized-response draw keys its support off
/// this distinction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct RatingScale {
    min: f64,
    max: f64,
    discrete: bool,
    values: Vec<f64>,
}

impl RatingScale {
    /// Integer scale `{min, min+1, ..., max}`.
    pub fn integer(min: i64, max: i64) -> Result<Self> {
        if min > max {
            return Err(Error::InvalidArgument(format!(
                "scale minimum {min} exceeds maximum {max}"
            )));
        }
        Ok(Self {
            min: min as f64,
            max: max as f64,
            discrete: true,
            values: (min..=max).map(|v| v as f64).collect(),
        })
    }

    pub fn continuous(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) || min > max {
            return Err(Error::InvalidArgument(format!(
                "invalid continuous scale [{min}, {max}]"
            )));
        }
        Ok(Self {
            min,
            max,
            discrete: false,
            values: Vec::new(),
        })
    }

    /// Discrete scale over an explicit value set.
    pub fn discrete(values: &[f64]) -> Result<Self> {
        let mut values: Vec<f64> = values.to_vec();
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "discrete scale needs at least one finite value".into(),
            ));
        }
        values.sort_by(f64::total_cmp);
        values.dedup();
        Ok(Self {
            min: values[0],
            max: values[values.len() - 1],
            discrete: true,
            values,
        })
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn is_discrete(&self) -> bool {
        self.discrete
    }

    /// Permitted values of a discrete scale (empty for continuous scales).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn contains(&self, value: f64) -> bool {
        if !value.is_finite() || value < self.min || value > self.max {
            return false;
        }
        !self.discrete || self.values.binary_search_by(|v| v.total_cmp(&value)).is_ok()
    }

    /// Mean of the uniform distribution over the scale's support.
    pub fn uniform_mean(&self) -> f64 {
        if self.discrete {
            self.values.iter().sum::<f64>() / self.values.len() as f64
        } else {
            0.5 * (self.min + self.max)
        }
    }

    /// Clamps to `[min, max]` and, for discrete scales, snaps to the nearest
    /// permitted value.
    pub fn snap(&self, value: f64) -> f64 {
        let clamped = value.clamp(self.min, self.max);
        if !self.discrete {
            return clamped;
        }
        let mut best = self.values[0];
        for &v in &self.values {
            if (v - clamped).abs() < (best - clamped).abs() {
                best = v;
            }
        }
        best
    }
}

impl fmt::Display for RatingScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let is_int_range = self.discrete
            && self.values.len() as f64 == self.max - self.min + 1.0
            && self.values.iter().all(|v| v.fract() == 0.0);
        if is_int_range {
            write!(f, "{}..{}", self.min, self.max)
        } else if self.discrete {
            let parts: Vec<String> = self.values.iter().map(|v| v.to_string()).collect();
            write!(f, "{{{}}}", parts.join(","))
        } else {
            write!(f, "[{},{}]", self.min, self.max)
        }
    }
}

impl TryFrom<String> for RatingScale {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<RatingScale> for String {
    fn from(s: RatingScale) -> String {
        s.to_string()
    }
}

/// Accepted forms: `1..5` (integer range), `[1,1000]` (continuous interval),
/// `{0.5,1,1.5}` (explicit discrete set).
impl FromStr for RatingScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidArgument(format!("cannot parse rating scale '{s}'"));
        if let Some(inner) = s.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            let (lo, hi) = inner.split_once(',').ok_or_else(bad)?;
            let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
            let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
            return Self::continuous(lo, hi);
        }
        if let Some(inner) = s.strip_prefix('{').and_then(|r| r.strip_suffix('}')) {
            let values = inner
                .split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()?;
            return Self::discrete(&values);
        }
        let (lo, hi) = s.split_once("..").ok_or_else(bad)?;
        let lo: i64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: i64 = hi.trim().parse().map_err(|_| bad())?;
        Self::integer(lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_forms() {
        let s: RatingScale = "1..5".parse().unwrap();
        assert!(s.is_discrete());
        assert_eq!(s.values(), &[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(s.to_string(), "1..5");

        let c: RatingScale = "[1,1000]".parse().unwrap();
        assert!(!c.is_discrete());
        assert!(c.contains(512.25));
        assert!(!c.contains(1000.5));

        let d: RatingScale = "{0.5, 1, 1.5}".parse().unwrap();
        assert!(d.contains(1.0));
        assert!(!d.contains(1.25));
        assert!("5..1".parse::<RatingScale>().is_err());
        assert!("abc".parse::<RatingScale>().is_err());
    }

    #[test]
    fn snap_and_mean() {
        let s = RatingScale::integer(1, 5).unwrap();
        assert_eq!(s.snap(3.4), 3.0);
        assert_eq!(s.snap(9.0), 5.0);
        assert_eq!(s.uniform_mean(), 3.0);
    }
}
