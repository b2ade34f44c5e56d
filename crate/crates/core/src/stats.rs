//! Empirical quantiles and confidence bands.

use crate::error::{Error, Result};

/// Width of every confidence band reported by the crate, in standard errors.
pub const Z_CI: f64 = 3.0;

/// 1-based rank of the lower empirical `p`-quantile among `n` samples: `⌈p·n⌉`, at least 1.
pub fn quantile_rank(n: usize, p: f64) -> usize {
    ((p * n as f64).ceil() as usize).clamp(1, n.max(1))
}

/// Lower empirical quantile: the `⌈p·N⌉`-th smallest sample.
pub fn empirical_quantile(samples: &[f64], p: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::domain("empirical quantile of an empty sample"));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("quantile level must lie in (0,1), got {p}")));
    }
    let k = quantile_rank(samples.len(), p);
    let mut buf = samples.to_vec();
    let (_, v, _) = buf.select_nth_unstable_by(k - 1, f64::total_cmp);
    Ok(*v)
}

/// Ranks `(lo, hi)` bracketing order statistic `k` of `n` samples at
/// `z` binomial standard errors.
pub fn order_statistic_band(n: usize, k: usize, z: f64) -> (usize, usize) {
    let p = k as f64 / n as f64;
    let half = z * (n as f64 * p * (1.0 - p)).sqrt();
    let lo = (k as f64 - half).floor().max(1.0) as usize;
    let hi = ((k as f64 + half).ceil() as usize).min(n).max(k);
    (lo.min(k), hi)
}

/// Standard error of a binomial proportion.
pub fn binomial_se(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// A point estimate with a confidence band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, lo: value, hi: value }
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }
}

/// Keeps the `keep` smallest values pushed into it. Memory stays
/// `O(keep)` regardless of how many samples stream through.
#[derive(Debug, Clone)]
pub struct LowerTail {
    keep: usize,
    values: Vec<f64>,
}

impl LowerTail {
    pub fn new(keep: usize) -> Self {
        LowerTail { keep: keep.max(1), values: Vec::with_capacity(2 * keep.max(1)) }
    }

    pub fn push(&mut self, x: f64) {
        self.values.push(x);
        if self.values.len() >= 2 * self.keep {
            self.compact();
        }
    }

    fn compact(&mut self) {
        if self.values.len() > self.keep {
            self.values.select_nth_unstable_by(self.keep - 1, f64::total_cmp);
            self.values.truncate(self.keep);
        }
    }

    pub fn merge(mut self, other: LowerTail) -> LowerTail {
        self.values.extend(other.values);
        self.compact();
        self
    }

    /// The retained values in ascending order.
    pub fn into_sorted(mut self) -> Vec<f64> {
        self.compact();
        self.values.sort_by(f64::total_cmp);
        self.values
    }
}
