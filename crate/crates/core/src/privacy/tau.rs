use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Knee detector for a data-usage distribution.
///
/// Usages are sorted descending into a rank curve, smoothed with a centered
/// moving average, and the threshold is the raw usage at the interior rank
/// with the largest discrete second difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TauEstimator {
    /// Moving-average window as a fraction of the number of users.
    pub window_fraction: f64,
    pub min_window: usize,
    pub min_distinct: usize,
}

impl Default for TauEstimator {
    fn default() -> Self {
        Self {
            window_fraction: 0.05,
            min_window: 3,
            min_distinct: 10,
        }
    }
}

impl TauEstimator {
    pub fn window(&self, n: usize) -> usize {
        let w = ((n as f64 * self.window_fraction).round() as usize).max(self.min_window);
        // odd, so the window is centered
        w | 1
    }

    pub fn estimate(&self, usages: &[u64]) -> Result<f64> {
        let mut sorted: Vec<u64> = usages.to_vec();
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        let mut distinct = sorted.clone();
        distinct.dedup();
        if distinct.len() < self.min_distinct {
            return Err(Error::DegenerateUsage(format!(
                "{} distinct usage values, need at least {}",
                distinct.len(),
                self.min_distinct
            )));
        }
        let curve: Vec<f64> = sorted.iter().map(|&v| v as f64).collect();
        let smooth = moving_average(&curve, self.window(curve.len()) / 2);
        let knee = (1..smooth.len() - 1)
            .map(|r| (r, smooth[r - 1] - 2.0 * smooth[r] + smooth[r + 1]))
            .fold(None::<(usize, f64)>, |best, (r, d2)| match best {
                Some((_, b)) if b >= d2 => best,
                _ => Some((r, d2)),
            })
            .map(|(r, _)| r)
            .ok_or_else(|| Error::DegenerateUsage("usage curve too short".into()))?;
        let tau = curve[knee];
        if tau <= 0.0 {
            return Err(Error::DegenerateUsage(format!(
                "knee sits at zero usage (rank {knee})"
            )));
        }
        Ok(tau)
    }
}

/// Centered moving average; near the ends the window shrinks symmetrically
/// so that linear segments are reproduced exactly.
fn moving_average(values: &[f64], half: usize) -> Vec<f64> {
    let n = values.len();
    let mut prefix = vec![0.0; n + 1];
    for (i, v) in values.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
    }
    (0..n)
        .map(|r| {
            let h = half.min(r).min(n - 1 - r);
            (prefix[r + h + 1] - prefix[r - h]) / (2 * h + 1) as f64
        })
        .collect()
}

pub fn estimate_tau(usages: &[u64]) -> Result<f64> {
    TauEstimator::default().estimate(usages)
}
