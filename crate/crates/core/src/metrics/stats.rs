use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Pooled sample size up to which the Mann-Whitney null is enumerated.
pub const EXACT_LIMIT: usize = 20;

pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tail {
    TwoSided,
    /// Alternative: the first sample is stochastically smaller.
    Less,
    /// Alternative: the first sample is stochastically larger.
    Greater,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub tail: Tail,
    pub alpha: f64,
    pub fold_p_values: Vec<f64>,
    pub fold_verdicts: Vec<bool>,
    /// True only if every fold is significant.
    pub significant: bool,
}

impl TestResult {
    fn single(statistic: f64, p_value: f64, tail: Tail, alpha: f64) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        Self {
            statistic,
            p_value,
            tail,
            alpha,
            fold_p_values: vec![p_value],
            fold_verdicts: vec![p_value < alpha],
            significant: p_value < alpha,
        }
    }

    /// Joins per-fold results: the verdict holds only if it holds in every
    /// fold. The joined p-value is the largest fold p-value and the
    /// statistic the mean fold statistic.
    pub fn across_folds(folds: &[TestResult]) -> Result<TestResult> {
        let first = folds
            .first()
            .ok_or_else(|| Error::InvalidArgument("no fold results to combine".into()))?;
        if folds.iter().any(|f| f.tail != first.tail || f.alpha != first.alpha) {
            return Err(Error::Mismatch("fold results use different tails or levels".into()));
        }
        let fold_p_values: Vec<f64> = folds.iter().flat_map(|f| f.fold_p_values.iter().copied()).collect();
        let fold_verdicts: Vec<bool> = folds.iter().flat_map(|f| f.fold_verdicts.iter().copied()).collect();
        Ok(TestResult {
            statistic: folds.iter().map(|f| f.statistic).sum::<f64>() / folds.len() as f64,
            p_value: fold_p_values.iter().copied().fold(0.0, f64::max),
            tail: first.tail,
            alpha: first.alpha,
            significant: fold_verdicts.iter().all(|&v| v),
            fold_p_values,
            fold_verdicts,
        })
    }
}

/// Midranks (1-based) of the pooled sample.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let r = (start + end + 1) as f64 / 2.0;
        for &o in &order[start..end] {
            ranks[o] = r;
        }
        start = end;
    }
    ranks
}

/// U statistic of `a`: pairs (x in a, y in b) with x > y, ties counting 1/2.
pub fn u_statistic(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let na = a.len() as f64;
    ranks[..a.len()].iter().sum::<f64>() - na * (na + 1.0) / 2.0
}

/// Mann-Whitney U test of `a` against `b`.
///
/// With at most [`EXACT_LIMIT`] pooled values the null distribution is the
/// exact one over all assignments of the pooled midranks; above it a
/// tie-corrected normal approximation with continuity correction is used.
/// If every value is identical the p-value is 1.
pub fn mann_whitney(a: &[f64], b: &[f64], tail: Tail, alpha: f64) -> Result<TestResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "samples need at least two values each (got {} and {})",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::InvalidArgument("NaN in sample".into()));
    }
    let u = u_statistic(a, b);
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    if pooled.iter().all(|&x| x == pooled[0]) {
        return Ok(TestResult::single(u, 1.0, tail, alpha));
    }
    let p = if pooled.len() <= EXACT_LIMIT {
        exact_p(&midranks(&pooled), a.len(), u, tail)
    } else {
        normal_p(&pooled, a.len(), b.len(), u, tail)
    };
    Ok(TestResult::single(u, p, tail, alpha))
}

fn exact_p(ranks: &[f64], na: usize, u_obs: f64, tail: Tail) -> f64 {
    let n = ranks.len();
    let offset = (na * (na + 1)) as f64 / 2.0;
    let mean = (na * (n - na)) as f64 / 2.0;
    let tol = 1e-9;
    let (mut hits, mut total) = (0u64, 0u64);
    let mut pick: Vec<usize> = (0..na).collect();
    loop {
        let u = pick.iter().map(|&j| ranks[j]).sum::<f64>() - offset;
        let extreme = match tail {
            Tail::Less => u <= u_obs + tol,
            Tail::Greater => u >= u_obs - tol,
            Tail::TwoSided => (u - mean).abs() >= (u_obs - mean).abs() - tol,
        };
        hits += extreme as u64;
        total += 1;
        // next combination in lexicographic order
        let mut j = na;
        loop {
            if j == 0 {
                return hits as f64 / total as f64;
            }
            j -= 1;
            if pick[j] < n - na + j {
                break;
            }
        }
        pick[j] += 1;
        for l in j + 1..na {
            pick[l] = pick[l - 1] + 1;
        }
    }
}

fn normal_p(pooled: &[f64], na: usize, nb: usize, u: f64, tail: Tail) -> f64 {
    let n = (na + nb) as f64;
    let (na, nb) = (na as f64, nb as f64);
    let mean = na * nb / 2.0;
    let mut sorted = pooled.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut ties = 0.0;
    let mut start = 0;
    while start < sorted.len() {
        let mut end = start + 1;
        while end < sorted.len() && sorted[end] == sorted[start] {
            end += 1;
        }
        let t = (end - start) as f64;
        ties += t * t * t - t;
        start = end;
    }
    let var = na * nb / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let sd = var.sqrt();
    let std_normal = Normal::standard();
    match tail {
        Tail::Less => std_normal.cdf((u - mean + 0.5) / sd),
        Tail::Greater => std_normal.sf((u - mean - 0.5) / sd),
        Tail::TwoSided => {
            let z = ((u - mean).abs() - 0.5).max(0.0) / sd;
            2.0 * std_normal.sf(z)
        }
    }
}

/// Two-tailed test for a difference between two independent correlations
/// via the Fisher z-transform.
pub fn corr_z_test(r1: f64, n1: usize, r2: f64, n2: usize, alpha: f64) -> Result<TestResult> {
    for (r, n) in [(r1, n1), (r2, n2)] {
        if !(r.abs() < 1.0) {
            return Err(Error::InvalidArgument(format!("correlation {r} outside (-1, 1)")));
        }
        if n <= 3 {
            return Err(Error::InvalidArgument(format!("sample size {n} must exceed 3")));
        }
    }
    let se = (1.0 / (n1 - 3) as f64 + 1.0 / (n2 - 3) as f64).sqrt();
    let z = (r1.atanh() - r2.atanh()) / se;
    let p = 2.0 * Normal::standard().sf(z.abs());
    Ok(TestResult::single(z, p, Tail::TwoSided, alpha))
}
