//! mMTC random access decoded by successive interference cancellation.
//!
//! Active devices are decoded strongest first; each one sees the weaker,
//! not yet cancelled devices as noise, and decoding stops at the first
//! failure. The error rate is the expected fraction of undecoded devices,
//! `1 − E[decoded]/λ` for `Poisson(λ)` arrivals.
//!
//! Arrival-rate searches use a stratified estimator: each Monte Carlo path
//! is a sequence of i.i.d. gains, and the population of size `n` uses the
//! first `n` gains of every path. Conditional means for all `n` come out of
//! one pass, and `E[decoded]/λ = Σ_n Pois(n−1; λ)·E[decoded | n]/n`, so the
//! error rate becomes a smooth deterministic function of `λ`.

use rand_distr::{Distribution, Poisson};

use crate::error::Result;
use crate::mc::{sample_exp_gain, McPlan};
use crate::search::{max_feasible, SearchBracket};
use crate::special::{poisson_pmf, poisson_upper_index};
use crate::stats::{Estimate, Z_CI};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrialOutcome {
    pub n_active: usize,
    pub n_decoded_mmtc: usize,
    pub embb_decoded: bool,
    pub embb_active: bool,
}

/// Rate threshold `2^r − 1` on the SINR.
pub fn sinr_threshold(rate: f64) -> f64 {
    rate.exp2() - 1.0
}

/// Number of devices decoded by SIC over `gains` at rate `r_m`.
pub fn sic_decode_orth(gains: &[f64], r_m: f64) -> usize {
    let mut sorted = gains.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut rest: f64 = sorted.iter().sum();
    for (k, &g) in sorted.iter().enumerate() {
        rest -= g;
        let sinr = g / (1.0 + rest.max(0.0));
        if sinr.ln_1p() / std::f64::consts::LN_2 < r_m {
            return k;
        }
    }
    sorted.len()
}

/// Plain Monte Carlo estimate of the mMTC error rate at arrival rate `lambda_m`.
pub fn error_rate_orth(lambda_m: f64, r_m: f64, gamma_m: f64, plan: &McPlan) -> f64 {
    if lambda_m <= 0.0 {
        return 0.0;
    }
    let arrivals = Poisson::new(lambda_m).expect("positive Poisson mean");
    let decoded: u64 = plan
        .map_batches(|rng, len, _| {
            let mut gains = Vec::new();
            let mut sum = 0u64;
            for _ in 0..len {
                let a = arrivals.sample(rng) as usize;
                gains.clear();
                gains.extend((0..a).map(|_| sample_exp_gain(gamma_m, rng)));
                sum += sic_decode_orth(&gains, r_m) as u64;
            }
            sum
        })
        .into_iter()
        .sum();
    (1.0 - decoded as f64 / (lambda_m * plan.trials as f64)).clamp(0.0, 1.0)
}

/// Gains of one path kept in descending order with suffix sums.
#[derive(Debug, Clone, Default)]
pub(crate) struct GainPath {
    /// Descending.
    pub sorted: Vec<f64>,
    /// `suffix[k] = Σ_{j ≥ k} sorted[j]`, with `suffix[n] = 0`.
    pub suffix: Vec<f64>,
}

impl GainPath {
    pub fn clear(&mut self) {
        self.sorted.clear();
        self.suffix.clear();
        self.suffix.push(0.0);
    }

    pub fn insert(&mut self, g: f64) {
        if self.suffix.is_empty() {
            self.suffix.push(0.0);
        }
        let pos = self.sorted.partition_point(|&x| x >= g);
        self.sorted.insert(pos, g);
        self.suffix.insert(pos, self.suffix[pos]);
        for s in &mut self.suffix[..=pos] {
            *s += g;
        }
    }

    /// Prefix minimum of `G_k / (1 + Σ_{j>k} G_j)`, stopped at the first
    /// entry below `theta_min`. Device `k` is decoded by interference-free
    /// SIC at any threshold `θ ≥ theta_min` iff entry `k` exists and is `≥ θ`.
    pub fn ratio_prefix_min(&self, theta_min: f64, out: &mut Vec<f64>) {
        out.clear();
        let mut m = f64::INFINITY;
        for (k, &g) in self.sorted.iter().enumerate() {
            m = m.min(g / (1.0 + self.suffix[k + 1]));
            if m < theta_min {
                return;
            }
            out.push(m);
        }
    }

    /// Prefix minimum of `G_k/θ − 1 − Σ_{j>k} G_j` over the first `limit`
    /// devices: the largest extra interference under which devices
    /// `0..=k` all decode.
    pub fn slack_prefix_min(&self, theta: f64, limit: usize, out: &mut Vec<f64>) {
        out.clear();
        let inv = 1.0 / theta;
        let mut m = f64::INFINITY;
        for k in 0..limit.min(self.sorted.len()) {
            m = m.min(self.sorted[k] * inv - 1.0 - self.suffix[k + 1]);
            out.push(m);
        }
    }
}

/// Paths per batch in stratified tables. Paths are expensive, so batches
/// are much smaller than the plain Monte Carlo default.
pub(crate) const TABLE_BATCH: u64 = 1 << 10;

pub(crate) fn table_plan(plan: &McPlan) -> McPlan {
    McPlan { batch: TABLE_BATCH.min(plan.trials), ..*plan }
}

/// Entries `≥ x` at the front of a nonincreasing sequence.
pub(crate) fn count_at_least(prefix_min: &[f64], x: f64) -> usize {
    prefix_min.partition_point(|&v| v >= x)
}

/// Size-biased Poisson weights `w[n] = Pois(n−1; λ)`, `w[0] = 0`.
pub(crate) fn size_biased_weights(lambda: f64, n_max: usize) -> Vec<f64> {
    let mut w = vec![0.0; n_max + 1];
    if n_max > 0 {
        w[1..].copy_from_slice(&poisson_pmf(lambda, n_max - 1));
    }
    w
}

/// Per-population-size sums of a nonnegative integer statistic.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Moments {
    pub sum: Vec<u64>,
    pub sumsq: Vec<u64>,
}

impl Moments {
    pub fn new(n_max: usize) -> Self {
        Moments { sum: vec![0; n_max + 1], sumsq: vec![0; n_max + 1] }
    }

    pub fn add(&mut self, n: usize, x: u64) {
        self.sum[n] += x;
        self.sumsq[n] += x * x;
    }

    pub fn merge(&mut self, other: &Moments) {
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sumsq.iter_mut().zip(&other.sumsq) {
            *a += b;
        }
    }

    pub fn mean(&self, n: usize, paths: u64) -> f64 {
        self.sum[n] as f64 / paths as f64
    }

    pub fn sd(&self, n: usize, paths: u64) -> f64 {
        let m = self.mean(n, paths);
        (self.sumsq[n] as f64 / paths as f64 - m * m).max(0.0).sqrt()
    }

    /// `E[X]/λ` under size-biased weights, with a conservative standard
    /// error (strata are correlated through shared paths, so standard
    /// deviations are added rather than variances).
    pub fn per_arrival(&self, weights: &[f64], paths: u64) -> (f64, f64) {
        let mut mean = 0.0;
        let mut se = 0.0;
        for n in 1..weights.len().min(self.sum.len()) {
            let w = weights[n] / n as f64;
            mean += w * self.mean(n, paths);
            se += w * self.sd(n, paths);
        }
        (mean, se / (paths as f64).sqrt())
    }
}

/// Stratified decoded-count table for interference-free SIC at one or
/// more mMTC rates.
#[derive(Debug, Clone)]
pub struct OrthTable {
    pub paths: u64,
    pub n_max: usize,
    pub rates: Vec<f64>,
    decoded: Vec<Moments>,
}

impl OrthTable {
    pub fn build(rates: &[f64], gamma_m: f64, n_max: usize, plan: &McPlan) -> Self {
        let thetas: Vec<f64> = rates.iter().map(|&r| sinr_threshold(r)).collect();
        let theta_min = thetas.iter().copied().fold(f64::INFINITY, f64::min);
        let plan = table_plan(plan);
        let parts = plan.map_batches(|rng, len, _| {
            let mut acc = vec![Moments::new(n_max); thetas.len()];
            let mut path = GainPath::default();
            let mut pm = Vec::with_capacity(n_max);
            for _ in 0..len {
                path.clear();
                for n in 1..=n_max {
                    path.insert(sample_exp_gain(gamma_m, rng));
                    path.ratio_prefix_min(theta_min, &mut pm);
                    for (j, &theta) in thetas.iter().enumerate() {
                        acc[j].add(n, count_at_least(&pm, theta) as u64);
                    }
                }
            }
            acc
        });
        let mut decoded = vec![Moments::new(n_max); thetas.len()];
        for part in &parts {
            for (d, p) in decoded.iter_mut().zip(part) {
                d.merge(p);
            }
        }
        OrthTable { paths: plan.trials, n_max, rates: rates.to_vec(), decoded }
    }

    /// Error rate at arrival rate `lambda` for rate index `j`. Populations
    /// beyond `n_max` count as fully undecoded.
    pub fn error(&self, j: usize, lambda: f64) -> Estimate {
        if lambda <= 0.0 {
            let e = 1.0 - self.decoded[j].mean(1, self.paths);
            let se = self.decoded[j].sd(1, self.paths) / (self.paths as f64).sqrt();
            return Estimate { value: e, lo: e - Z_CI * se, hi: e + Z_CI * se };
        }
        let w = size_biased_weights(lambda, self.n_max);
        let (frac, se) = self.decoded[j].per_arrival(&w, self.paths);
        let e = 1.0 - frac;
        Estimate { value: e, lo: e - Z_CI * se, hi: e + Z_CI * se }
    }

    /// Largest arrival rate with error at most `eps`, with a band from the
    /// pessimistic and optimistic error estimates.
    pub fn max_arrival(&self, j: usize, eps: f64, bracket: SearchBracket) -> Result<Option<Estimate>> {
        arrival_band(|lam, side| pick(self.error(j, lam), side) <= eps, bracket)
    }
}

/// Which end of an estimate a feasibility check uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Pessimistic,
    Central,
    Optimistic,
}

/// Error-like quantity at the requested side of its band.
pub(crate) fn pick(e: Estimate, side: Side) -> f64 {
    match side {
        Side::Pessimistic => e.hi,
        Side::Central => e.value,
        Side::Optimistic => e.lo,
    }
}

/// Largest feasible `λ` for the central, pessimistic and optimistic
/// versions of a feasibility predicate.
pub(crate) fn arrival_band<P>(pred: P, bracket: SearchBracket) -> Result<Option<Estimate>>
where
    P: Fn(f64, Side) -> bool,
{
    let Some(value) = max_feasible(|l| pred(l, Side::Central), bracket)? else {
        return Ok(None);
    };
    let lo = max_feasible(|l| pred(l, Side::Pessimistic), bracket)?.unwrap_or(0.0);
    let hi = max_feasible(|l| pred(l, Side::Optimistic), bracket)?.unwrap_or(value);
    Ok(Some(Estimate { value, lo: lo.min(value), hi: hi.max(value) }))
}

/// Population cap covering `Poisson(lambda_hi)` up to mass `1 − 1e-12`.
pub fn population_cap(lambda_hi: f64) -> usize {
    poisson_upper_index(lambda_hi, 1e-12).max(1)
}

/// Largest Poisson arrival rate with error rate at most `eps_m`.
/// `Ok(None)` means even the smallest rate in the bracket is infeasible.
pub fn max_arrival_orth(r_m: f64, eps_m: f64, gamma_m: f64, plan: &McPlan, bracket: SearchBracket) -> Result<Option<f64>> {
    Ok(max_arrival_orth_estimate(r_m, eps_m, gamma_m, plan, bracket)?.map(|e| e.value))
}

/// [`max_arrival_orth`] with a confidence band.
pub fn max_arrival_orth_estimate(
    r_m: f64,
    eps_m: f64,
    gamma_m: f64,
    plan: &McPlan,
    bracket: SearchBracket,
) -> Result<Option<Estimate>> {
    let table = OrthTable::build(&[r_m], gamma_m, population_cap(bracket.hi.max(1.0)), plan);
    table.max_arrival(0, eps_m, bracket)
}

/// Upper end for arrival-rate brackets: a short pilot run locates the
/// orthogonal capacity and the result is padded by 30%.
pub fn pilot_arrival_limit(r_m: f64, eps_m: f64, gamma_m: f64, plan: &McPlan) -> Result<f64> {
    let pilot = plan.salted(0x9_1107).with_trials(plan.trials.min(4000))?;
    let mut hi: f64 = 8.0;
    loop {
        let table = OrthTable::build(&[r_m], gamma_m, population_cap(hi), &pilot);
        if table.error(0, hi).value > eps_m || hi >= 65_536.0 {
            let lam = table.max_arrival(0, eps_m, SearchBracket::new(0.0, hi))?.map_or(0.0, |e| e.hi);
            return Ok((1.3 * lam).max(4.0));
        }
        hi *= 2.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decode_examples() {
        assert_eq!(sic_decode_orth(&[1.0], 1.0), 1);
        assert_eq!(sic_decode_orth(&[3.0, 1.0], 1.0), 2);
        assert_eq!(sic_decode_orth(&[1.0, 3.0], 1.0), 2);
        assert_eq!(sic_decode_orth(&[1.0, 0.5], 1.0), 0);
        assert_eq!(sic_decode_orth(&[], 1.0), 0);
    }

    #[test]
    fn path_prefix_minima_match_direct_decoding() {
        let gains = [0.3, 2.0, 0.05, 7.0, 1.1, 0.6];
        let mut path = GainPath::default();
        let mut pm = Vec::new();
        for (n, &g) in gains.iter().enumerate() {
            path.insert(g);
            path.ratio_prefix_min(0.01, &mut pm);
            for r in [0.02, 0.1, 0.5, 1.0] {
                assert!(sinr_threshold(r) >= 0.01);
                let via = count_at_least(&pm, sinr_threshold(r));
                assert_eq!(via, sic_decode_orth(&gains[..=n], r), "n={n} r={r}");
            }
        }
    }

    #[test]
    fn zero_rate_is_error_free() {
        let plan = McPlan::new(1000, 3).unwrap();
        assert_eq!(error_rate_orth(0.0, 0.04, 3.0, &plan), 0.0);
    }

    #[test]
    fn huge_rate_decodes_nothing() {
        let plan = McPlan::new(1000, 3).unwrap();
        assert_eq!(error_rate_orth(5.0, 60.0, 3.0, &plan), 1.0);
    }

    #[test]
    fn lax_target_saturates_bracket() {
        let plan = McPlan::new(500, 3).unwrap();
        let b = SearchBracket::new(0.0, 20.0);
        assert_eq!(max_arrival_orth(0.04, 1.0, 3.1623, &plan, b).unwrap(), Some(20.0));
    }

    #[test]
    fn lone_device_violation_is_infeasible() {
        let plan = McPlan::new(2000, 3).unwrap();
        // Single-device outage at r = 3 bits with Γ = 1 is 1 − e^{−7}.
        let b = SearchBracket::new(0.0, 20.0);
        assert_eq!(max_arrival_orth(3.0, 0.1, 1.0, &plan, b).unwrap(), None);
    }
}
