use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Below this many observations per side the p-value is computed by
/// exhaustive enumeration instead of the normal approximation.
pub const EXACT_MAX_N: usize = 8;

/// Enumeration is skipped (falling back to the normal approximation) when
/// the number of arrangements exceeds this bound.
const MAX_ARRANGEMENTS: u128 = 2_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PMethod {
    Exact,
    NormalApprox,
    /// All pooled values equal; p = 0.5 by convention.
    Degenerate,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MwuResult {
    /// U statistic of the first (`with`) sample, midrank tie handling.
    pub u: f64,
    /// One-sided p-value for the alternative that the first sample is
    /// stochastically larger.
    pub p: f64,
    pub method: PMethod,
}

/// One-sided Mann-Whitney U test of `with` stochastically larger than
/// `without`. Uses exact enumeration below [`EXACT_MAX_N`] per side and the
/// tie-corrected normal approximation with continuity correction otherwise.
pub fn mann_whitney_u(with: &[f64], without: &[f64]) -> Result<MwuResult> {
    if with.is_empty() || without.is_empty() {
        return Err(Error::Data("Mann-Whitney test requires two nonempty samples".into()));
    }
    let u = u_statistic(with, without);
    if degenerate(with, without) {
        return Ok(MwuResult { u, p: 0.5, method: PMethod::Degenerate });
    }
    let exact_feasible = arrangements(with.len(), without.len()) <= MAX_ARRANGEMENTS;
    if (with.len() < EXACT_MAX_N || without.len() < EXACT_MAX_N) && exact_feasible {
        Ok(MwuResult { u, p: exact_p(with, without), method: PMethod::Exact })
    } else {
        Ok(MwuResult { u, p: normal_p(with, without), method: PMethod::NormalApprox })
    }
}

/// U statistic of the first sample with midrank tie handling.
pub fn u_statistic(with: &[f64], without: &[f64]) -> f64 {
    let ranks = midranks(with, without);
    let n1 = with.len();
    let r1: f64 = ranks[..n1].iter().sum();
    r1 - (n1 * (n1 + 1)) as f64 / 2.0
}

/// Exact one-sided p-value `P(U >= u_observed)` by enumerating every
/// assignment of the pooled observations to the first sample.
pub fn exact_p(with: &[f64], without: &[f64]) -> f64 {
    let ranks = midranks(with, without);
    let n1 = with.len();
    let n = ranks.len();
    let observed_r1: f64 = ranks[..n1].iter().sum();
    // count subsets of size n1 whose rank sum is >= observed (tolerance for
    // the midrank halves)
    let mut at_least = 0u64;
    let mut total = 0u64;
    let mut chosen = Vec::with_capacity(n1);
    enumerate_subsets(&ranks, n1, 0, 0.0, &mut chosen, &mut |sum| {
        total += 1;
        if sum >= observed_r1 - 1e-9 {
            at_least += 1;
        }
    });
    at_least as f64 / total as f64
}

/// Normal approximation with tie-corrected variance and continuity
/// correction.
pub fn normal_p(with: &[f64], without: &[f64]) -> f64 {
    let n1 = with.len() as f64;
    let n2 = without.len() as f64;
    let n = n1 + n2;
    let u = u_statistic(with, without);
    let mean = n1 * n2 / 2.0;

    // tie correction: sum of t^3 - t over tie groups of the pooled sample
    let mut pooled: Vec<f64> = with.iter().chain(without).copied().collect();
    pooled.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i + 1;
        while j < pooled.len() && pooled[j] == pooled[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let variance = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if variance <= 0.0 {
        return 0.5;
    }
    let z = (u - mean - 0.5) / variance.sqrt();
    let normal = Normal::new(0.0, 1.0).unwrap();
    1.0 - normal.cdf(z)
}

fn degenerate(with: &[f64], without: &[f64]) -> bool {
    let first = with[0];
    with.iter().chain(without).all(|&x| x == first)
}

fn arrangements(n1: usize, n2: usize) -> u128 {
    let n = n1 + n2;
    let k = n1.min(n2);
    let mut result: u128 = 1;
    for i in 0..k {
        result = result.saturating_mul((n - i) as u128) / (i + 1) as u128;
        if result > MAX_ARRANGEMENTS {
            return result;
        }
    }
    result
}

fn midranks(with: &[f64], without: &[f64]) -> Vec<f64> {
    let n = with.len() + without.len();
    let mut indexed: Vec<(f64, usize)> =
        with.iter().chain(without).copied().enumerate().map(|(i, v)| (v, i)).collect();
    indexed.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && indexed[j].0 == indexed[i].0 {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0;
        for item in &indexed[i..j] {
            ranks[item.1] = rank;
        }
        i = j;
    }
    ranks
}

fn enumerate_subsets(
    ranks: &[f64],
    size: usize,
    start: usize,
    sum: f64,
    chosen: &mut Vec<usize>,
    visit: &mut impl FnMut(f64),
) {
    if chosen.len() == size {
        visit(sum);
        return;
    }
    let remaining = size - chosen.len();
    for i in start..=ranks.len() - remaining {
        chosen.push(i);
        enumerate_subsets(ranks, size, i + 1, sum + ranks[i], chosen, visit);
        chosen.pop();
    }
}
