//! Wilcoxon signed-rank test for paired samples.
//!
//! Zero differences are dropped, tied absolute differences share their
//! average rank. Up to [`EXACT_LIMIT`] non-zero pairs the p-value comes
//! from the exact null distribution of the positive rank sum (every sign
//! assignment equally likely); above it, from the normal approximation with
//! tie and continuity corrections.

use alloc::vec;
use alloc::vec::Vec;

/// Largest effective sample size handled exactly.
pub const EXACT_LIMIT: usize = 25;

/// Differences with magnitude below this are zero, and magnitudes closer
/// than this are tied.
pub const TIE_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alternative {
    TwoSided,
    /// First sample tends to be larger.
    Greater,
    /// First sample tends to be smaller.
    Less,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exact,
    Normal,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WilcoxonError {
    #[error("paired samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no paired samples")]
    Empty,
    #[error("all differences are zero")]
    AllZeroDifferences,
}

/// Per-unit scores of two configurations, paired by position.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSamples {
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

impl PairedSamples {
    pub fn new(first: Vec<f64>, second: Vec<f64>) -> Result<Self, WilcoxonError> {
        if first.len() != second.len() {
            return Err(WilcoxonError::LengthMismatch(first.len(), second.len()));
        }
        if first.is_empty() {
            return Err(WilcoxonError::Empty);
        }
        Ok(PairedSamples { first, second })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilcoxonResult {
    /// Sum of ranks of positive differences.
    pub statistic: f64,
    /// Pairs left after dropping zero differences.
    pub n: usize,
    pub p_value: f64,
    pub method: Method,
}

/// Average ranks (1-based) of `values`, ties sharing the mean rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] - values[order[start]] < TIE_EPSILON {
            end += 1;
        }
        let rank = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        start = end;
    }
    ranks
}

pub fn wilcoxon_signed_rank(
    samples: &PairedSamples,
    alternative: Alternative,
) -> Result<WilcoxonResult, WilcoxonError> {
    let diffs: Vec<f64> = samples
        .first
        .iter()
        .zip(&samples.second)
        .map(|(a, b)| a - b)
        .filter(|d| d.abs() >= TIE_EPSILON)
        .collect();
    if diffs.is_empty() {
        return Err(WilcoxonError::AllZeroDifferences);
    }
    let magnitudes: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&magnitudes);
    let statistic: f64 =
        diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let n = diffs.len();

    if n <= EXACT_LIMIT {
        // Average ranks are multiples of 1/2, so doubled ranks are integers.
        let doubled: Vec<usize> = ranks.iter().map(|r| libm::round(r * 2.0) as usize).collect();
        let observed = libm::round(statistic * 2.0) as usize;
        let (lower, upper) = exact_tails(&doubled, observed);
        let p_value = match alternative {
            Alternative::TwoSided => (2.0 * lower.min(upper)).min(1.0),
            Alternative::Greater => upper,
            Alternative::Less => lower,
        };
        Ok(WilcoxonResult { statistic, n, p_value, method: Method::Exact })
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let mut variance = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0;
        let mut sorted = ranks.clone();
        sorted.sort_by(f64::total_cmp);
        let mut i = 0;
        while i < sorted.len() {
            let mut j = i + 1;
            while j < sorted.len() && sorted[j] == sorted[i] {
                j += 1;
            }
            let t = (j - i) as f64;
            variance -= (t * t * t - t) / 48.0;
            i = j;
        }
        let sd = libm::sqrt(variance);
        let upper_z = (statistic - mean - 0.5) / sd;
        let lower_z = (statistic - mean + 0.5) / sd;
        let upper = normal_sf(upper_z);
        let lower = 1.0 - normal_sf(lower_z);
        let p_value = match alternative {
            Alternative::TwoSided => (2.0 * lower.min(upper)).min(1.0),
            Alternative::Greater => upper,
            Alternative::Less => lower,
        };
        Ok(WilcoxonResult { statistic, n, p_value, method: Method::Normal })
    }
}

/// `P(W <= observed)` and `P(W >= observed)` for the doubled positive rank
/// sum `W` under random signs.
fn exact_tails(doubled_ranks: &[usize], observed: usize) -> (f64, f64) {
    let total: usize = doubled_ranks.iter().sum();
    let mut dist = vec![0.0f64; total + 1];
    dist[0] = 1.0;
    let mut reach = 0;
    for &r in doubled_ranks {
        for s in (0..=reach).rev() {
            let p = dist[s] * 0.5;
            dist[s] = p;
            dist[s + r] += p;
        }
        reach += r;
    }
    let lower = dist[..=observed.min(total)].iter().sum();
    let upper = dist[observed.min(total + 1)..].iter().sum();
    (lower, upper)
}

fn normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / core::f64::consts::SQRT_2)
}

/// Significance marks: `**` below 0.05, `*` below 0.1.
pub fn stars(p_value: f64) -> &'static str {
    if p_value < 0.05 {
        "**"
    } else if p_value < 0.1 {
        "*"
    } else {
        ""
    }
}
