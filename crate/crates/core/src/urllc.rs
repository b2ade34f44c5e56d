//! URLLC outage and rate under frequency diversity.
//!
//! A URLLC packet spread over `F_U` channels fails when the normalized
//! mutual information `(1/F_U) Σ_f log2(1 + G_f / (1 + δ_f G_tar))` falls
//! below its rate. Without interference the largest rate meeting `ε_U` is
//! the lower `ε_U`-quantile of that quantity.

use std::f64::consts::LN_2;

use rand::Rng;

use crate::error::{Error, Result};
use crate::mc::{sample_exp_gain, McPlan, Stream};
use crate::special::{integrate_adaptive, laguerre_128, laguerre_64};
use crate::stats::{order_statistic_band, quantile_rank, Estimate, LowerTail, Z_CI};

/// eMBB interference seen by the URLLC receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Interference {
    None,
    /// `δ_f = 1` on every channel.
    AlwaysOn { g_tar: f64 },
    /// `δ_f ~ Bernoulli(a_b)`, i.i.d. per channel.
    Bernoulli { g_tar: f64, a_b: f64 },
}

/// Minimum number of expected exceedances for a quantile estimate.
pub const MIN_EXCEEDANCES: f64 = 100.0;

/// Mutual information of one slot given gains and per-channel interference power.
pub fn mutual_info(gains: &[f64], interference: &[f64]) -> f64 {
    let total: f64 = gains
        .iter()
        .zip(interference)
        .map(|(g, i)| (g / (1.0 + i)).ln_1p())
        .sum();
    total / (gains.len() as f64 * LN_2)
}

struct Draw {
    gains: Vec<f64>,
    uniforms: Vec<f64>,
}

impl Draw {
    fn new(f_u: usize) -> Self {
        Draw { gains: vec![0.0; f_u], uniforms: vec![0.0; f_u] }
    }

    fn fill(&mut self, gamma_u: f64, with_uniforms: bool, rng: &mut Stream) {
        for g in &mut self.gains {
            *g = sample_exp_gain(gamma_u, rng);
        }
        if with_uniforms {
            for u in &mut self.uniforms {
                *u = rng.random::<f64>();
            }
        }
    }

    /// Interference indicator of channel `f` for activation probability `a_b`.
    fn active(&self, f: usize, a_b: Option<f64>) -> bool {
        a_b.is_none_or(|a| self.uniforms[f] < a)
    }

    fn info(&self, g: f64, a_b: Option<f64>) -> f64 {
        let total: f64 = self
            .gains
            .iter()
            .enumerate()
            .map(|(f, x)| {
                let i = if self.active(f, a_b) { g } else { 0.0 };
                (x / (1.0 + i)).ln_1p()
            })
            .sum();
        total / (self.gains.len() as f64 * LN_2)
    }

    fn info_slope(&self, g: f64, a_b: Option<f64>) -> f64 {
        let total: f64 = self
            .gains
            .iter()
            .enumerate()
            .filter(|(f, _)| self.active(*f, a_b))
            .map(|(_, x)| 1.0 / (1.0 + g + x) - 1.0 / (1.0 + g))
            .sum();
        total / (self.gains.len() as f64 * LN_2)
    }
}

fn split(interference: Interference) -> (f64, Option<Option<f64>>) {
    match interference {
        Interference::None => (0.0, None),
        Interference::AlwaysOn { g_tar } => (g_tar, Some(None)),
        Interference::Bernoulli { g_tar, a_b } => (g_tar, Some(Some(a_b))),
    }
}

/// One draw of the per-slot normalized mutual information.
pub fn mutual_info_sample(f_u: usize, gamma_u: f64, interference: Interference, rng: &mut Stream) -> f64 {
    let mut d = Draw::new(f_u.max(1));
    sample_info(&mut d, gamma_u, interference, rng)
}

fn sample_info(d: &mut Draw, gamma_u: f64, interference: Interference, rng: &mut Stream) -> f64 {
    let (g, mode) = split(interference);
    let bern = matches!(mode, Some(Some(_)));
    d.fill(gamma_u, bern, rng);
    match mode {
        None => d.info(0.0, None),
        Some(a) => d.info(g, a),
    }
}

/// Fraction of slots whose mutual information falls below `r_u`.
pub fn outage_probability(r_u: f64, f_u: usize, gamma_u: f64, interference: Interference, plan: &McPlan) -> f64 {
    let counts = plan.map_batches(|rng, len, _| {
        let mut d = Draw::new(f_u.max(1));
        (0..len).filter(|_| sample_info(&mut d, gamma_u, interference, rng) < r_u).count() as u64
    });
    counts.iter().sum::<u64>() as f64 / plan.trials as f64
}

/// Lower empirical `eps_u`-quantile of the mutual information.
pub fn max_rate(f_u: usize, gamma_u: f64, eps_u: f64, interference: Interference, plan: &McPlan) -> Result<f64> {
    Ok(max_rate_estimate(f_u, gamma_u, eps_u, interference, plan)?.value)
}

/// [`max_rate`] with an order-statistic confidence band.
pub fn max_rate_estimate(
    f_u: usize,
    gamma_u: f64,
    eps_u: f64,
    interference: Interference,
    plan: &McPlan,
) -> Result<Estimate> {
    if f_u == 0 {
        return Err(Error::domain("URLLC needs at least one channel"));
    }
    check_trials(eps_u, plan)?;
    let n = plan.trials as usize;
    let k = quantile_rank(n, eps_u);
    let (k_lo, k_hi) = order_statistic_band(n, k, Z_CI);
    let tails = plan.map_batches(|rng, len, _| {
        let mut d = Draw::new(f_u);
        let mut tail = LowerTail::new(k_hi);
        for _ in 0..len {
            tail.push(sample_info(&mut d, gamma_u, interference, rng));
        }
        tail
    });
    let merged = tails.into_iter().reduce(LowerTail::merge).unwrap_or_else(|| LowerTail::new(1));
    let v = merged.into_sorted();
    Ok(Estimate { value: v[k - 1], lo: v[k_lo - 1], hi: v[(k_hi - 1).min(v.len() - 1)] })
}

pub(crate) fn check_trials(eps_u: f64, plan: &McPlan) -> Result<()> {
    let expected = eps_u * plan.trials as f64;
    if expected < MIN_EXCEEDANCES {
        return Err(Error::InsufficientTrials {
            needed: (MIN_EXCEEDANCES / eps_u).ceil() as u64,
            got: plan.trials,
        });
    }
    Ok(())
}

/// Closed-form outage rate for a single channel without interference.
pub fn single_channel_rate(gamma_u: f64, eps_u: f64) -> f64 {
    (-gamma_u * (-eps_u).ln_1p()).ln_1p() / LN_2
}

/// Per-slot interference levels at which URLLC decoding starts to fail.
///
/// For each slot the mutual information is decreasing in the interference
/// power `g`, so the slot is in outage exactly when `g` exceeds a threshold.
/// Slots already in outage at `g = 0` are counted in `always_out`, slots
/// still decodable at `g_max` are dropped, and only the `keep` smallest
/// remaining thresholds are retained.
#[derive(Debug, Clone)]
pub struct ThresholdSet {
    pub trials: u64,
    pub always_out: u64,
    /// Ascending.
    pub smallest: Vec<f64>,
    pub g_max: f64,
}

impl ThresholdSet {
    /// Slots in outage at interference `g`.
    pub fn outages_at(&self, g: f64) -> u64 {
        self.always_out + self.smallest.partition_point(|&t| t < g) as u64
    }

    /// Largest `g` with at most `k` outages: the boundary of the feasible set.
    pub fn max_interference(&self, k: u64) -> Option<f64> {
        if self.always_out > k {
            return None;
        }
        let j = (k - self.always_out) as usize;
        Some(self.smallest.get(j).copied().unwrap_or(self.g_max).min(self.g_max))
    }
}

/// Largest tolerated outage count for target `eps` over `n` trials,
/// matching the lower-quantile convention of [`max_rate`].
pub fn max_outages(n: u64, eps: f64) -> u64 {
    quantile_rank(n as usize, eps) as u64 - 1
}

/// Computes a [`ThresholdSet`]. `a_b = None` means interference on every
/// channel; `Some(a)` draws `δ_f ~ Bernoulli(a)` from the same uniforms for
/// every `a`, so sets for different `a` are coupled.
pub fn interference_thresholds(
    r_u: f64,
    f_u: usize,
    gamma_u: f64,
    a_b: Option<f64>,
    g_max: f64,
    keep: usize,
    plan: &McPlan,
) -> ThresholdSet {
    let parts = plan.map_batches(|rng, len, _| {
        let mut d = Draw::new(f_u.max(1));
        let mut tail = LowerTail::new(keep);
        let mut out = 0u64;
        for _ in 0..len {
            d.fill(gamma_u, a_b.is_some(), rng);
            if d.info(0.0, a_b) < r_u {
                out += 1;
                continue;
            }
            if d.info(g_max, a_b) >= r_u {
                continue;
            }
            tail.push(newton_threshold(&d, r_u, a_b, g_max));
        }
        (out, tail)
    });
    let mut always_out = 0;
    let mut tail = LowerTail::new(keep);
    for (o, t) in parts {
        always_out += o;
        tail = tail.merge(t);
    }
    ThresholdSet { trials: plan.trials, always_out, smallest: tail.into_sorted(), g_max }
}

/// Root of `I(g) = r_u` on `(0, g_max)`. `I` is convex and decreasing, so
/// Newton from `g = 0` increases monotonically onto the root.
fn newton_threshold(d: &Draw, r_u: f64, a_b: Option<f64>, g_max: f64) -> f64 {
    let mut g = 0.0;
    for _ in 0..100 {
        let excess = d.info(g, a_b) - r_u;
        let slope = d.info_slope(g, a_b);
        if excess <= 0.0 || slope >= 0.0 {
            break;
        }
        let next = (g - excess / slope).min(g_max);
        if (next - g).abs() <= 1e-14 * (1.0 + g) {
            g = next;
            break;
        }
        g = next;
    }
    g
}

/// Default Markov parameter grid: 40 log-spaced points in `[0.05, 20]`.
pub fn default_t_grid() -> Vec<f64> {
    log_space(0.05, 20.0, 40)
}

pub(crate) fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// `E[(1 + G/(1+g_tar))^(−t)]` for `G` exponential with mean `gamma_u`.
///
/// Gauss-Laguerre with 128 nodes, checked against 64 nodes; when they
/// disagree by more than 1e-6 the integral is redone adaptively on
/// geometrically growing panels, which resolves the kink at `x ≈ 1/c`.
pub fn markov_expectation(gamma_u: f64, g_tar: f64, t: f64) -> f64 {
    let c = gamma_u / (1.0 + g_tar);
    let f = |x: f64| (-t * (c * x).ln_1p()).exp();
    let hi = laguerre_128().integrate(f);
    let lo = laguerre_64().integrate(f);
    if (hi - lo).abs() <= 1e-6 * hi.abs() {
        return hi;
    }
    let integrand = |x: f64| (-x).exp() * f(x);
    let mut edge = (1.0 / c).min(1.0);
    let mut total = integrate_adaptive(integrand, 0.0, edge, 1e-12);
    while edge < 60.0 {
        let next = 2.0 * edge;
        total += integrate_adaptive(integrand, edge, next, 1e-12);
        edge = next;
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovBound {
    pub rate: f64,
    /// Maximizing Markov parameter.
    pub t: f64,
    /// The bound was negative and has been replaced by 0.
    pub clamped: bool,
}

fn markov_value(gamma_u: f64, eps_u: f64, f_u: usize, g_tar: f64, t: f64) -> f64 {
    eps_u.log2() / (t * f_u as f64) - markov_expectation(gamma_u, g_tar, t).log2() / t
}

/// Lower bound on the URLLC rate with the eMBB always interfering,
/// maximized over `t_grid` and refined by golden-section search around the
/// best grid point.
pub fn rate_lower_bound_markov(
    gamma_u: f64,
    eps_u: f64,
    f_u: usize,
    g_tar: f64,
    t_grid: &[f64],
) -> Result<MarkovBound> {
    if t_grid.is_empty() || t_grid.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::domain("Markov parameter grid must be nonempty and positive"));
    }
    if f_u == 0 {
        return Err(Error::domain("URLLC needs at least one channel"));
    }
    let value = |t: f64| markov_value(gamma_u, eps_u, f_u, g_tar, t);
    let vals: Vec<f64> = t_grid.iter().map(|&t| value(t)).collect();
    let best = (0..vals.len()).fold(0, |b, i| if vals[i] > vals[b] { i } else { b });
    let (mut t_best, mut v_best) = (t_grid[best], vals[best]);
    if t_grid.len() > 1 {
        let mut sorted = t_grid.to_vec();
        sorted.sort_by(f64::total_cmp);
        let pos = sorted.partition_point(|&t| t < t_best);
        let a = sorted[pos.saturating_sub(1)];
        let b = sorted[(pos + 1).min(sorted.len() - 1)];
        let (t, v) = golden_max(value, a, b, 60);
        if v > v_best {
            t_best = t;
            v_best = v;
        }
    }
    Ok(if v_best > 0.0 {
        MarkovBound { rate: v_best, t: t_best, clamped: false }
    } else {
        MarkovBound { rate: 0.0, t: t_best, clamped: true }
    })
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::exp_integral_e1;

    #[test]
    fn mutual_info_hand_values() {
        assert!((mutual_info(&[1.0, 3.0], &[0.0, 0.0]) - 1.5).abs() < 1e-15);
        assert!((mutual_info(&[3.0], &[1.0]) - 2.5f64.log2()).abs() < 1e-15);
    }

    #[test]
    fn single_draw_without_interference_is_log2() {
        let plan = McPlan::new(1, 5).unwrap();
        let mut rng = plan.stream(0);
        let v = mutual_info_sample(1, 4.0, Interference::None, &mut rng);
        let mut rng = plan.stream(0);
        let g = sample_exp_gain(4.0, &mut rng);
        assert!((v - (1.0 + g).log2()).abs() < 1e-15);
    }

    #[test]
    fn outage_limits() {
        let plan = McPlan::new(10_000, 1).unwrap();
        assert_eq!(outage_probability(1e-300, 2, 10.0, Interference::None, &plan), 0.0);
        assert_eq!(outage_probability(50.0, 2, 10.0, Interference::None, &plan), 1.0);
    }

    #[test]
    fn max_rate_demands_trials() {
        let plan = McPlan::new(1000, 1).unwrap();
        assert!(matches!(
            max_rate(1, 100.0, 1e-3, Interference::None, &plan),
            Err(Error::InsufficientTrials { needed: 100_000, got: 1000 })
        ));
    }

    #[test]
    fn markov_expectation_matches_e1_identity() {
        let e = std::f64::consts::E * exp_integral_e1(1.0).unwrap();
        assert!((markov_expectation(1.0, 0.0, 1.0) - e).abs() < 1e-10);
        // Sharp integrand forces the adaptive path: c = 1e4, t = 1 gives z e^z E1(z), z = 1e-4.
        let z: f64 = 1e-4;
        let exact = z * z.exp() * exp_integral_e1(z).unwrap();
        assert!((markov_expectation(1e4, 0.0, 1.0) - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn markov_bound_at_eps_one_is_positive() {
        // Without an outage budget the bound approaches the ergodic rate as t → 0.
        let b = rate_lower_bound_markov(10.0, 1.0, 2, 1.0, &default_t_grid()).unwrap();
        assert!(!b.clamped && b.rate > 0.0);
    }

    #[test]
    fn markov_bound_clamps_when_vacuous() {
        let b = rate_lower_bound_markov(0.1, 1e-12, 1, 10.0, &default_t_grid()).unwrap();
        assert!(b.clamped && b.rate == 0.0);
    }

    #[test]
    fn thresholds_agree_with_direct_outage() {
        let plan = McPlan::new(20_000, 9).unwrap();
        let set = interference_thresholds(0.8, 3, 20.0, None, 50.0, 20_000, &plan);
        for g in [0.0, 0.5, 2.0, 7.0] {
            let direct = outage_probability(0.8, 3, 20.0, Interference::AlwaysOn { g_tar: g }, &plan);
            let via = set.outages_at(g) as f64 / plan.trials as f64;
            assert_eq!(direct, via, "g={g}");
        }
    }
}
