//! eMBB and mMTC sharing one radio resource.
//!
//! Orthogonal slicing splits time: the eMBB device gets a fraction `α` and
//! the mMTC devices the rest. Under non-orthogonal slicing the base station
//! runs SIC over the mMTC devices while the eMBB signal is still present,
//! tries the eMBB device at the first mMTC failure, and after a successful
//! eMBB decode resumes interference-free mMTC decoding.
//!
//! The non-orthogonal region is evaluated on a stratified table. For every
//! path of `n_max` mMTC gains, every population size `n` and every eMBB
//! target SNR `g` on the policy grid, one pass records
//!
//! * `c`: devices decoded before the eMBB attempt,
//! * `d_o`: devices decoded once the eMBB signal is cancelled,
//! * the largest eMBB rate that survives the attempt,
//! * the smallest eMBB rate at which the truncated interference sum `χ`
//!   already forces an eMBB error.
//!
//! Everything is kept as integer sums (difference arrays over the eMBB rate
//! grid), so tables are exact under any parallel reduction order.

use log::warn;
use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::config::ScenarioConfig;
use crate::embb::{activation_cap_for_target, max_target_snr, orth_rate, threshold_snr, EmbbPolicy};
use crate::error::{Error, Result};
use crate::mc::{sample_exp_gain, McPlan};
use crate::mmtc::{
    arrival_band, pick, pilot_arrival_limit, population_cap, sic_decode_orth, sinr_threshold,
    size_biased_weights, table_plan, GainPath, Moments, OrthTable, Side, TrialOutcome,
};
use crate::region::{RegionCurve, RegionPoint, Scheme};
use crate::search::{max_feasible, SearchBracket};
use crate::special::{ln_factorials, poisson_pmf, poisson_upper_index};
use crate::stats::{Estimate, Z_CI};
use crate::urllc::log_space;

/// Relative slack on probability comparisons that hold with equality at
/// grid endpoints (e.g. `1 − a_cap(cap(1−ε_B)) = ε_B`).
const REL_SLACK: f64 = 1e-9;

fn rate_of(sinr: f64) -> f64 {
    sinr.ln_1p() / std::f64::consts::LN_2
}

/// eMBB target SNRs searched by the non-orthogonal scheme, as fractions `ρ`
/// of the orthogonal power cap.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyGrid {
    pub rho: Vec<f64>,
}

impl Default for PolicyGrid {
    fn default() -> Self {
        PolicyGrid { rho: log_space(1e-3, 1.0, 24) }
    }
}

impl PolicyGrid {
    pub fn new(rho: Vec<f64>) -> Result<Self> {
        if rho.is_empty() || rho.iter().any(|&r| !(r > 0.0 && r <= 1.0)) {
            return Err(Error::domain("policy fractions must lie in (0, 1]"));
        }
        Ok(PolicyGrid { rho })
    }

    /// `g_tar = ρ · Γ_B / E1(G_min/Γ_B)` with the orthogonal `G_min`.
    pub fn targets(&self, gamma_b: f64, eps_b: f64) -> Result<Vec<f64>> {
        let cap = max_target_snr(threshold_snr(gamma_b, eps_b)?, gamma_b)?;
        Ok(self.rho.iter().map(|r| r * cap).collect())
    }
}

/// One joint decoding attempt over the given mMTC gains.
pub fn joint_sic_trial(gains: &[f64], embb_active: bool, g_tar: f64, r_b: f64, r_m: f64) -> TrialOutcome {
    let mut out = TrialOutcome { n_active: gains.len(), embb_active, ..TrialOutcome::default() };
    if !embb_active {
        out.n_decoded_mmtc = sic_decode_orth(gains, r_m);
        return out;
    }
    let mut sorted = gains.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut rest: f64 = sorted.iter().sum();
    for (k, &g) in sorted.iter().enumerate() {
        let after = (rest - g).max(0.0);
        if rate_of(g / (1.0 + g_tar + after)) >= r_m {
            rest = after;
            continue;
        }
        if rate_of(g_tar / (1.0 + rest)) >= r_b {
            out.embb_decoded = true;
            out.n_decoded_mmtc = k + sic_decode_orth(&sorted[k..], r_m);
        } else {
            out.n_decoded_mmtc = k;
        }
        return out;
    }
    out.n_decoded_mmtc = sorted.len();
    out.embb_decoded = rate_of(g_tar) >= r_b;
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointErrorRates {
    pub mmtc: f64,
    pub embb: f64,
}

/// Plain Monte Carlo error rates of the joint decoder under `policy`.
pub fn noma_error_rates(
    lambda_m: f64,
    r_b: f64,
    policy: &EmbbPolicy,
    cfg: &ScenarioConfig,
    plan: &McPlan,
) -> Result<JointErrorRates> {
    if lambda_m < 0.0 {
        return Err(Error::domain(format!("arrival rate must be nonnegative, got {lambda_m}")));
    }
    let arrivals = (lambda_m > 0.0).then(|| Poisson::new(lambda_m).expect("positive Poisson mean"));
    let parts = plan.map_batches(|rng, len, _| {
        let mut gains = Vec::new();
        let (mut decoded, mut embb_ok) = (0u64, 0u64);
        for _ in 0..len {
            let a = arrivals.as_ref().map_or(0, |p| p.sample(rng) as usize);
            gains.clear();
            gains.extend((0..a).map(|_| sample_exp_gain(cfg.gamma_m, rng)));
            let active = rng.random::<f64>() < policy.a_b;
            let t = joint_sic_trial(&gains, active, policy.g_tar, r_b, cfg.r_m);
            decoded += t.n_decoded_mmtc as u64;
            embb_ok += u64::from(t.embb_active && t.embb_decoded);
        }
        (decoded, embb_ok)
    });
    let (decoded, embb_ok) = parts.iter().fold((0, 0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let n = plan.trials as f64;
    let mmtc = if lambda_m > 0.0 { (1.0 - decoded as f64 / (lambda_m * n)).clamp(0.0, 1.0) } else { 0.0 };
    Ok(JointErrorRates { mmtc, embb: 1.0 - embb_ok as f64 / n })
}

/// Counts for one `(n, target, eMBB rate)` cell: eMBB successes, the sums
/// of `d_o − c` and `d_o² − c²` over successful paths, and paths whose
/// truncated interference sum forces an eMBB error.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Cell {
    succ: i64,
    gain: i64,
    gain_sq: i64,
    chi: i64,
}

impl std::ops::AddAssign for Cell {
    fn add_assign(&mut self, o: Cell) {
        self.succ += o.succ;
        self.gain += o.gain;
        self.gain_sq += o.gain_sq;
        self.chi += o.chi;
    }
}

/// Integer accumulators of the joint table for one batch of paths.
#[derive(Debug, Clone)]
struct JointAcc {
    orth: Moments,
    sic: Vec<Moments>,
    /// Difference arrays over the eMBB rate grid, indexed `(n, i, j)`.
    cells: Vec<Cell>,
}

impl JointAcc {
    fn new(n_targets: usize, n_max: usize, n_rates: usize) -> Self {
        JointAcc {
            orth: Moments::new(n_max),
            sic: vec![Moments::new(n_max); n_targets],
            cells: vec![Cell::default(); (n_max + 1) * n_targets * (n_rates + 1)],
        }
    }

    fn merge(mut self, other: JointAcc) -> JointAcc {
        self.orth.merge(&other.orth);
        for (a, b) in self.sic.iter_mut().zip(&other.sic) {
            a.merge(b);
        }
        for (a, &b) in self.cells.iter_mut().zip(&other.cells) {
            *a += b;
        }
        self
    }
}

/// Stratified statistics of the joint decoder on a grid of eMBB targets
/// and eMBB rates.
#[derive(Debug, Clone)]
pub struct JointTable {
    pub paths: u64,
    pub n_max: usize,
    pub eps_b: f64,
    pub eps_m: f64,
    /// eMBB target SNRs, ascending.
    pub targets: Vec<f64>,
    /// Largest activation probability admitted by each target.
    pub activation_caps: Vec<f64>,
    /// eMBB rate grid, ascending.
    pub rates: Vec<f64>,
    orth: Moments,
    sic: Vec<Moments>,
    /// Cumulative counts indexed `(n, i, j)`.
    cells: Vec<Cell>,
}

impl JointTable {
    pub fn build(cfg: &ScenarioConfig, targets: &[f64], rates: &[f64], n_max: usize, plan: &McPlan) -> Result<Self> {
        if rates.is_empty() || rates.windows(2).any(|w| w[0] >= w[1]) || rates[0] < 0.0 {
            return Err(Error::domain("eMBB rate grid must be nonnegative and strictly increasing"));
        }
        if targets.is_empty() || targets.iter().any(|&g| !(g > 0.0)) {
            return Err(Error::domain("eMBB targets must be positive"));
        }
        let activation_caps = targets
            .iter()
            .map(|&g| activation_cap_for_target(g, cfg.gamma_b))
            .collect::<Result<Vec<_>>>()?;
        let theta = sinr_threshold(cfg.r_m);
        let betas: Vec<f64> = rates.iter().map(|&r| sinr_threshold(r)).collect();
        let (nt, nr) = (targets.len(), rates.len());
        let stride_j = nr + 1;
        let acc = table_plan(plan).fold_batches(
            || JointAcc::new(nt, n_max, nr),
            |rng, len, _| {
                let mut acc = JointAcc::new(nt, n_max, nr);
                let mut path = GainPath::default();
                let (mut ratio_pm, mut slack_pm) = (Vec::with_capacity(n_max), Vec::with_capacity(n_max));
                for _ in 0..len {
                    path.clear();
                    for n in 1..=n_max {
                        path.insert(sample_exp_gain(cfg.gamma_m, rng));
                        path.ratio_prefix_min(theta, &mut ratio_pm);
                        let d_o = ratio_pm.len();
                        acc.orth.add(n, d_o as u64);
                        path.slack_prefix_min(theta, d_o, &mut slack_pm);
                        let row = &mut acc.cells[n * nt * stride_j..(n + 1) * nt * stride_j];
                        // Targets ascend, so both counts below only shrink with i.
                        let mut c = d_o;
                        let mut first = n;
                        for (i, &g) in targets.iter().enumerate() {
                            while c > 0 && slack_pm[c - 1] < g {
                                c -= 1;
                            }
                            acc.sic[i].add(n, c as u64);
                            let cells = &mut row[i * stride_j..(i + 1) * stride_j];
                            // eMBB attempt against the devices not yet cancelled.
                            let sigma = g / (1.0 + path.suffix[c]);
                            let end = betas.partition_point(|&b| b <= sigma);
                            let dc = (d_o - c) as i64;
                            let dc2 = (d_o * d_o - c * c) as i64;
                            cells[0].succ += 1;
                            cells[0].gain += dc;
                            cells[0].gain_sq += dc2;
                            cells[end].succ -= 1;
                            cells[end].gain -= dc;
                            cells[end].gain_sq -= dc2;
                            // Devices too weak to decode even without the eMBB
                            // signal's interference are never cancelled first.
                            let cut = (1.0 + g) * theta;
                            while first > 0 && path.sorted[first - 1] <= cut {
                                first -= 1;
                            }
                            let sigma_chi = g / (1.0 + path.suffix[first]);
                            cells[betas.partition_point(|&b| b < sigma_chi)].chi += 1;
                        }
                    }
                }
                acc
            },
            JointAcc::merge,
        );
        let mut cells = acc.cells;
        for block in cells.chunks_mut(stride_j) {
            let mut run = Cell::default();
            for c in block.iter_mut() {
                run += *c;
                *c = run;
            }
        }
        Ok(JointTable {
            paths: plan.trials,
            n_max,
            eps_b: cfg.eps_b,
            eps_m: cfg.eps_m,
            targets: targets.to_vec(),
            activation_caps,
            rates: rates.to_vec(),
            orth: acc.orth,
            sic: acc.sic,
            cells,
        })
    }

    fn cell(&self, i: usize, n: usize, j: usize) -> Cell {
        self.cells[(n * self.targets.len() + i) * (self.rates.len() + 1) + j]
    }

    fn mean_sd(&self, count: i64) -> (f64, f64) {
        let p = count as f64 / self.paths as f64;
        (p, (p * (1.0 - p)).max(0.0).sqrt())
    }

    /// Conditional eMBB failure probability given an active eMBB device,
    /// `Σ_n Pois(n; λ) Pr(fail | n)`. Populations beyond `n_max` fail.
    pub fn embb_failure(&self, i: usize, j: usize, lambda: f64) -> Estimate {
        let pois = poisson_pmf(lambda, self.n_max);
        let tail = (1.0 - pois.iter().sum::<f64>()).max(0.0);
        let mut value = tail;
        let mut sd = 0.0;
        if self.targets[i] < sinr_threshold(self.rates[j]) {
            value += pois[0];
        }
        for (n, w) in pois.iter().enumerate().skip(1) {
            let (ok, s) = self.mean_sd(self.cell(i, n, j).succ);
            value += w * (1.0 - ok);
            sd += w * s;
        }
        let se = sd / (self.paths as f64).sqrt();
        Estimate { value, lo: (value - Z_CI * se).max(0.0), hi: (value + Z_CI * se).min(1.0) }
    }

    /// `E[D]/λ` with the eMBB device silent.
    pub fn decoded_fraction_orth(&self, lambda: f64) -> Estimate {
        let w = size_biased_weights(lambda, self.n_max);
        let (m, se) = self.orth.per_arrival(&w, self.paths);
        Estimate { value: m, lo: m - Z_CI * se, hi: m + Z_CI * se }
    }

    /// `E[D]/λ` with an active eMBB device at target `i` and rate `j`.
    pub fn decoded_fraction_joint(&self, i: usize, j: usize, lambda: f64) -> Estimate {
        let w = size_biased_weights(lambda, self.n_max);
        let m_paths = self.paths as f64;
        let (mut mean, mut sd) = (0.0, 0.0);
        for (n, &wn) in w.iter().enumerate().skip(1) {
            let cell = self.cell(i, n, j);
            let m1 = (self.sic[i].sum[n] as i64 + cell.gain) as f64 / m_paths;
            let m2 = (self.sic[i].sumsq[n] as i64 + cell.gain_sq) as f64 / m_paths;
            mean += wn / n as f64 * m1;
            sd += wn / n as f64 * (m2 - m1 * m1).max(0.0).sqrt();
        }
        let se = sd / m_paths.sqrt();
        Estimate { value: mean, lo: mean - Z_CI * se, hi: mean + Z_CI * se }
    }

    /// mMTC error rate when the eMBB device is active with probability `a`.
    pub fn mmtc_error(&self, i: usize, j: usize, lambda: f64, a: f64) -> Estimate {
        if lambda <= 0.0 {
            return Estimate::exact(0.0);
        }
        let eo = self.decoded_fraction_orth(lambda);
        let ea = self.decoded_fraction_joint(i, j, lambda);
        Estimate {
            value: 1.0 - (1.0 - a) * eo.value - a * ea.value,
            lo: 1.0 - (1.0 - a) * eo.hi - a * ea.hi,
            hi: 1.0 - (1.0 - a) * eo.lo - a * ea.lo,
        }
    }

    /// Smallest activation probability meeting the eMBB target at `λ`, if
    /// the power cap admits it and the resulting mMTC error meets `ε_M`.
    pub fn feasible_activation(&self, i: usize, j: usize, lambda: f64, side: Side) -> Option<f64> {
        let pf = pick(self.embb_failure(i, j, lambda), side).clamp(0.0, 1.0);
        if pf >= 1.0 {
            return None;
        }
        let a = (1.0 - self.eps_b) / (1.0 - pf);
        if a > self.activation_caps[i] * (1.0 + REL_SLACK) {
            return None;
        }
        let a = a.min(self.activation_caps[i]);
        (pick(self.mmtc_error(i, j, lambda, a), side) <= self.eps_m).then_some(a)
    }

    /// `Pr(χ event | n)` mixed over `Poisson(λ)`; populations beyond
    /// `n_max` count as no event, which keeps the bound on `λ` valid.
    pub fn chi_probability(&self, i: usize, j: usize, lambda: f64) -> Estimate {
        let pois = poisson_pmf(lambda, self.n_max);
        let mut value = 0.0;
        let mut sd = 0.0;
        if sinr_threshold(self.rates[j]) >= self.targets[i] {
            value += pois[0];
        }
        for (n, w) in pois.iter().enumerate().skip(1) {
            let (p, s) = self.mean_sd(self.cell(i, n, j).chi);
            value += w * p;
            sd += w * s;
        }
        let se = sd / (self.paths as f64).sqrt();
        Estimate { value, lo: (value - Z_CI * se).max(0.0), hi: (value + Z_CI * se).min(1.0) }
    }

    /// Lower bound on the eMBB error at full activation cap:
    /// `1 − a + a·Pr(χ event)`.
    pub fn chi_bound(&self, i: usize, j: usize, lambda: f64) -> Estimate {
        let a = self.activation_caps[i];
        let p = self.chi_probability(i, j, lambda);
        let f = |x: f64| 1.0 - a + a * x;
        Estimate { value: f(p.value), lo: f(p.lo), hi: f(p.hi) }
    }

    /// Largest supported arrival rate at rate index `j`, maximised over
    /// the target grid.
    pub fn max_arrival(&self, j: usize, bracket: SearchBracket) -> Result<NomaArrival> {
        let mut best: Option<(usize, Estimate)> = None;
        let (mut lo, mut hi) = (0.0f64, 0.0f64);
        for i in 0..self.targets.len() {
            let band = arrival_band(|l, side| self.feasible_activation(i, j, l, side).is_some(), bracket)?;
            if let Some(e) = band {
                lo = lo.max(e.lo);
                hi = hi.max(e.hi);
                if best.is_none_or(|(_, b)| e.value > b.value) {
                    best = Some((i, e));
                }
            }
        }
        let Some((i, e)) = best else {
            return Ok(NomaArrival { r_b: self.rates[j], lambda: Estimate::exact(0.0), policy: None, monotone: true });
        };
        let a = self.feasible_activation(i, j, e.value, Side::Central).unwrap_or(self.activation_caps[i]);
        let monotone = (0..16).all(|k| {
            let l = e.value * k as f64 / 16.0;
            self.feasible_activation(i, j, l, Side::Central).is_some()
        });
        if !monotone {
            warn!("joint feasibility is not monotone in the arrival rate at r_b = {}", self.rates[j]);
        }
        Ok(NomaArrival {
            r_b: self.rates[j],
            lambda: Estimate { value: e.value, lo: lo.min(e.value), hi: hi.max(e.value) },
            policy: Some(ArrivalPolicy {
                g_tar: self.targets[i],
                a_b: a,
                embb_error: 1.0 - a * (1.0 - self.embb_failure(i, j, e.value).value),
                mmtc_error: self.mmtc_error(i, j, e.value, a).value,
            }),
            monotone,
        })
    }

    /// Upper bound on the supported arrival rate from the `χ` event.
    pub fn chi_upper_bound(&self, j: usize, bracket: SearchBracket) -> Result<Estimate> {
        let mut out = Estimate::exact(0.0);
        for i in 0..self.targets.len() {
            let band = arrival_band(|l, side| pick(self.chi_bound(i, j, l), side) <= self.eps_b * (1.0 + REL_SLACK), bracket)?;
            if let Some(e) = band {
                out = Estimate { value: out.value.max(e.value), lo: out.lo.max(e.lo), hi: out.hi.max(e.hi) };
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivalPolicy {
    pub g_tar: f64,
    pub a_b: f64,
    pub embb_error: f64,
    pub mmtc_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NomaArrival {
    pub r_b: f64,
    pub lambda: Estimate,
    /// Maximising policy; `None` when no target supports the rate.
    pub policy: Option<ArrivalPolicy>,
    /// Whether feasibility held on an even λ grid below the optimum.
    pub monotone: bool,
}

fn mmtc_bracket(cfg: &ScenarioConfig, plan: &McPlan) -> Result<(SearchBracket, usize)> {
    let hi = pilot_arrival_limit(cfg.r_m, cfg.eps_m, cfg.gamma_m, plan)?;
    Ok((SearchBracket::new(0.0, hi), population_cap(hi)))
}

/// Largest arrival rate supported together with eMBB rate `r_b`.
pub fn max_arrival_noma(
    r_b: f64,
    cfg: &ScenarioConfig,
    plan: &McPlan,
    policy_grid: &PolicyGrid,
    bracket: SearchBracket,
) -> Result<NomaArrival> {
    if r_b < 0.0 {
        return Err(Error::domain(format!("eMBB rate must be nonnegative, got {r_b}")));
    }
    let targets = policy_grid.targets(cfg.gamma_b, cfg.eps_b)?;
    let table = JointTable::build(cfg, &targets, &[r_b], population_cap(bracket.hi.max(1.0)), plan)?;
    table.max_arrival(0, bracket)
}

/// Upper bound on [`max_arrival_noma`] from the truncated interference sum.
pub fn upper_bound_chi(r_b: f64, cfg: &ScenarioConfig, policy_grid: &PolicyGrid, plan: &McPlan) -> Result<f64> {
    if !(r_b > 0.0) {
        return Err(Error::domain(format!("eMBB rate must be positive, got {r_b}")));
    }
    let (bracket, n_max) = mmtc_bracket(cfg, plan)?;
    let targets = policy_grid.targets(cfg.gamma_b, cfg.eps_b)?;
    let table = JointTable::build(cfg, &targets, &[r_b], n_max, plan)?;
    Ok(table.chi_upper_bound(0, bracket)?.value)
}

/// `Pr(G_1 + … + G_n ≥ t)` for i.i.d. exponential gains of mean `gamma`:
/// the probability that `Poisson(t/γ)` stays below `n`.
pub fn erlang_tail(n: usize, t: f64, gamma: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    if n == 0 {
        return 0.0;
    }
    let mu = t / gamma;
    let lnf = ln_factorials(n - 1);
    let ln_mu = mu.ln();
    (0..n).map(|k| (k as f64 * ln_mu - mu - lnf[k]).exp()).sum::<f64>().min(1.0)
}

/// Semi-analytic eMBB error bound with Poisson-mixed Erlang interference,
/// minimised over the target grid at full activation cap.
#[derive(Debug, Clone)]
pub struct ErlangBound {
    pub gamma_m: f64,
    pub targets: Vec<f64>,
    pub activation_caps: Vec<f64>,
}

impl ErlangBound {
    pub fn new(cfg: &ScenarioConfig, policy_grid: &PolicyGrid) -> Result<Self> {
        let targets = policy_grid.targets(cfg.gamma_b, cfg.eps_b)?;
        let activation_caps = targets
            .iter()
            .map(|&g| activation_cap_for_target(g, cfg.gamma_b))
            .collect::<Result<Vec<_>>>()?;
        Ok(ErlangBound { gamma_m: cfg.gamma_m, targets, activation_caps })
    }

    /// `q_B(r_b, λ)`. Poisson mass beyond `1 − 1e-12` counts as failure.
    pub fn embb_error(&self, r_b: f64, lambda: f64) -> f64 {
        let beta = sinr_threshold(r_b);
        let n_top = poisson_upper_index(lambda, 1e-12);
        let pois = poisson_pmf(lambda, n_top);
        let tail = (1.0 - pois.iter().sum::<f64>()).max(0.0);
        self.targets
            .iter()
            .zip(&self.activation_caps)
            .map(|(&g, &a)| {
                let fail = if beta <= 0.0 {
                    tail
                } else {
                    let c = g / beta - 1.0;
                    if c <= 0.0 {
                        1.0
                    } else {
                        tail + pois.iter().enumerate().skip(1).map(|(n, w)| w * erlang_tail(n, c, self.gamma_m)).sum::<f64>()
                    }
                };
                1.0 - a + a * fail.min(1.0)
            })
            .fold(1.0, f64::min)
    }

    /// Largest `λ` with `q_B(r_b, λ) ≤ eps`, 0 if none.
    pub fn max_arrival(&self, r_b: f64, eps: f64, bracket: SearchBracket) -> Result<f64> {
        Ok(max_feasible(|l| self.embb_error(r_b, l) <= eps * (1.0 + REL_SLACK), bracket)?.unwrap_or(0.0))
    }
}

/// Erlang-based bounds and the rate below which they sandwich the
/// non-orthogonal arrival rate.
#[derive(Debug, Clone)]
pub struct ErlangBounds {
    pub lower: RegionCurve,
    pub upper: RegionCurve,
    pub r_b_low: f64,
    /// Orthogonal capacity at `ε_M − ε_B`.
    pub lambda_lb: Estimate,
    /// Orthogonal capacity at `ε_M`.
    pub lambda_ub: Estimate,
}

fn erlang_bounds_from(
    r_b_grid: &[f64],
    cfg: &ScenarioConfig,
    orth: &OrthTable,
    bracket: SearchBracket,
    policy_grid: &PolicyGrid,
) -> Result<ErlangBounds> {
    if cfg.eps_m <= cfg.eps_b {
        return Err(Error::domain("the Erlang lower bound needs eps_m > eps_b"));
    }
    let zero = Estimate::exact(0.0);
    let lambda_lb = orth.max_arrival(0, cfg.eps_m - cfg.eps_b, bracket)?.unwrap_or(zero);
    let lambda_ub = orth.max_arrival(0, cfg.eps_m, bracket)?.unwrap_or(zero);
    let q = ErlangBound::new(cfg, policy_grid)?;
    let r_orth = orth_rate(cfg.gamma_b, cfg.eps_b)?;
    let r_b_low = max_feasible(
        |r| q.embb_error(r, lambda_lb.value) <= cfg.eps_b * (1.0 + REL_SLACK),
        SearchBracket::new(0.0, r_orth).with_tol(1e-6 * r_orth),
    )?
    .unwrap_or(0.0);
    let mut lower = RegionCurve::new(Scheme::AppendixBLb, ("r_b", "lambda_m"));
    let mut upper = RegionCurve::new(Scheme::AppendixBUb, ("r_b", "lambda_m"));
    let mut lo_pts = Vec::new();
    let mut up_pts = Vec::new();
    for &r in r_b_grid {
        let lam_q = q.max_arrival(r, cfg.eps_b, bracket)?;
        let lam_q_m = q.max_arrival(r, cfg.eps_m, bracket)?;
        lo_pts.push(
            RegionPoint::new(r, lambda_lb.value.min(lam_q))
                .with("lambda_lo", lambda_lb.lo.min(lam_q))
                .with("lambda_hi", lambda_lb.hi.min(lam_q))
                .with("lambda_q", lam_q)
                .with("lambda_eps_m_variant", lambda_lb.value.min(lam_q_m)),
        );
        up_pts.push(
            RegionPoint::new(r, lambda_ub.value)
                .with("lambda_lo", lambda_ub.lo)
                .with("lambda_hi", lambda_ub.hi),
        );
    }
    lower.extend(lo_pts);
    upper.extend(up_pts);
    lower.notes.push(format!("r_b_low = {r_b_low}"));
    Ok(ErlangBounds { lower, upper, r_b_low, lambda_lb, lambda_ub })
}

/// Erlang lower bound and orthogonal upper bound on the eMBB rate grid.
pub fn bounds_erlang(r_b_grid: &[f64], cfg: &ScenarioConfig, plan: &McPlan) -> Result<ErlangBounds> {
    let (bracket, n_max) = mmtc_bracket(cfg, plan)?;
    let orth = OrthTable::build(&[cfg.r_m], cfg.gamma_m, n_max, plan);
    erlang_bounds_from(r_b_grid, cfg, &orth, bracket, &PolicyGrid::default())
}

fn oma_from(cfg: &ScenarioConfig, orth: &OrthTable, alpha_grid: &[f64], bracket: SearchBracket) -> Result<RegionCurve> {
    let r_orth = orth_rate(cfg.gamma_b, cfg.eps_b)?;
    let mut curve = RegionCurve::new(Scheme::HOma, ("r_b", "lambda_m"));
    let mut pts = Vec::with_capacity(alpha_grid.len());
    for &alpha in alpha_grid {
        let r_b = alpha * r_orth;
        if alpha >= 1.0 {
            pts.push(RegionPoint::new(r_orth, 0.0).with("alpha", 1.0));
            continue;
        }
        let r_eff = cfg.r_m / (1.0 - alpha);
        let j = orth.rates.iter().position(|&r| r == r_eff).expect("rate tabulated");
        let lam = orth.max_arrival(j, cfg.eps_m, bracket)?.unwrap_or(Estimate::exact(0.0));
        if lam.value >= bracket.hi {
            warn!("orthogonal arrival search saturated its bracket at alpha = {alpha}");
        }
        pts.push(
            RegionPoint::new(r_b, lam.value)
                .with("alpha", alpha)
                .with("r_m_eff", r_eff)
                .with("lambda_lo", lam.lo)
                .with("lambda_hi", lam.hi),
        );
    }
    curve.extend(pts);
    Ok(curve)
}

fn orth_rates(cfg: &ScenarioConfig, alpha_grid: &[f64]) -> Result<Vec<f64>> {
    if alpha_grid.iter().any(|&a| !(0.0..=1.0).contains(&a)) {
        return Err(Error::domain("time-sharing fractions must lie in [0, 1]"));
    }
    let mut rates = vec![cfg.r_m];
    for &a in alpha_grid.iter().filter(|&&a| a > 0.0 && a < 1.0) {
        rates.push(cfg.r_m / (1.0 - a));
    }
    Ok(rates)
}

/// Time-sharing region: `r_B = α r_B^orth`, `λ = λ^orth(r_M/(1−α))`.
pub fn oma_curve(cfg: &ScenarioConfig, plan: &McPlan, alpha_grid: &[f64]) -> Result<RegionCurve> {
    let rates = orth_rates(cfg, alpha_grid)?;
    let (bracket, n_max) = mmtc_bracket(cfg, plan)?;
    let orth = OrthTable::build(&rates, cfg.gamma_m, n_max, plan);
    oma_from(cfg, &orth, alpha_grid, bracket)
}

/// `α = k/32` for `k = 0..=32`.
pub fn default_alpha_grid() -> Vec<f64> {
    (0..=32).map(|k| k as f64 / 32.0).collect()
}

/// Evenly spaced eMBB rates on `[0, r_B^orth]` plus `r_B^low` and
/// `0.95 r_B^orth`, sorted and deduplicated.
pub fn default_r_b_grid(r_orth: f64, r_b_low: f64) -> Vec<f64> {
    let mut g: Vec<f64> = (0..=32).map(|k| r_orth * k as f64 / 32.0).collect();
    g.push(r_b_low.clamp(0.0, r_orth));
    g.push(0.95 * r_orth);
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

#[derive(Debug, Clone)]
pub struct MmtcRegionOptions {
    pub alpha_grid: Vec<f64>,
    /// eMBB rates; `None` selects [`default_r_b_grid`].
    pub r_b_grid: Option<Vec<f64>>,
    pub policy: PolicyGrid,
}

impl Default for MmtcRegionOptions {
    fn default() -> Self {
        MmtcRegionOptions { alpha_grid: default_alpha_grid(), r_b_grid: None, policy: PolicyGrid::default() }
    }
}

#[derive(Debug, Clone)]
pub struct MmtcRegion {
    pub oma: RegionCurve,
    pub noma: RegionCurve,
    pub chi_upper: RegionCurve,
    pub erlang: ErlangBounds,
    pub r_b_orth: f64,
    pub paths: u64,
    pub n_max: usize,
}

/// All eMBB/mMTC curves for one scenario. The orthogonal table and the
/// joint table share their gain paths, and scenarios that differ only in
/// eMBB parameters share them too (common random numbers).
pub fn region_mmtc(cfg: &ScenarioConfig, plan: &McPlan, opts: &MmtcRegionOptions) -> Result<MmtcRegion> {
    let (bracket, n_max) = mmtc_bracket(cfg, plan)?;
    let r_b_orth = orth_rate(cfg.gamma_b, cfg.eps_b)?;
    let orth = OrthTable::build(&orth_rates(cfg, &opts.alpha_grid)?, cfg.gamma_m, n_max, plan);
    let oma = oma_from(cfg, &orth, &opts.alpha_grid, bracket)?;

    let provisional = erlang_bounds_from(&[], cfg, &orth, bracket, &opts.policy)?;
    let grid = match &opts.r_b_grid {
        Some(g) => {
            let mut g = g.clone();
            g.sort_by(f64::total_cmp);
            g.dedup();
            g
        }
        None => default_r_b_grid(r_b_orth, provisional.r_b_low),
    };
    let erlang = erlang_bounds_from(&grid, cfg, &orth, bracket, &opts.policy)?;

    let targets = opts.policy.targets(cfg.gamma_b, cfg.eps_b)?;
    let table = JointTable::build(cfg, &targets, &grid, n_max, plan)?;
    let mut noma = RegionCurve::new(Scheme::HNomaSic, ("r_b", "lambda_m"));
    let mut chi_upper = RegionCurve::new(Scheme::AppendixBUb, ("r_b", "lambda_m"));
    let mut noma_pts = Vec::new();
    let mut chi_pts = Vec::new();
    for (j, &r_b) in grid.iter().enumerate() {
        let arr = table.max_arrival(j, bracket)?;
        let mut p = RegionPoint::new(r_b, arr.lambda.value)
            .with("lambda_lo", arr.lambda.lo)
            .with("lambda_hi", arr.lambda.hi)
            .with("monotone", f64::from(u8::from(arr.monotone)));
        if let Some(pol) = arr.policy {
            p = p
                .with("g_tar", pol.g_tar)
                .with("a_b", pol.a_b)
                .with("g_min", crate::embb::threshold_for_activation(pol.a_b, cfg.gamma_b))
                .with("pr_eb", pol.embb_error)
                .with("pr_em", pol.mmtc_error);
        }
        noma_pts.push(p);
        let chi = table.chi_upper_bound(j, bracket)?;
        let ub = chi.value.min(erlang.lambda_ub.value);
        chi_pts.push(
            RegionPoint::new(r_b, ub)
                .with("chi_bound", chi.value)
                .with("chi_lo", chi.lo)
                .with("chi_hi", chi.hi)
                .with("lambda_ub_orth", erlang.lambda_ub.value),
        );
    }
    noma.extend(noma_pts);
    chi_upper.extend(chi_pts);
    noma.notes.push(format!("paths = {}, n_max = {n_max}, bracket_hi = {}", plan.trials, bracket.hi));
    Ok(MmtcRegion { oma, noma, chi_upper, erlang, r_b_orth, paths: plan.trials, n_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mmtc::error_rate_orth;

    fn fig7() -> ScenarioConfig {
        ScenarioConfig {
            gamma_b: 316.227_766,
            gamma_u: 10.0,
            gamma_m: 3.162_277_7,
            eps_b: 1e-3,
            eps_u: 1e-5,
            eps_m: 0.1,
            f: 10,
            f_u: 0,
            s: 5,
            a_u: 1e-2,
            r_m: 0.04,
            n_per_resource: None,
        }
    }

    #[test]
    fn hand_traces() {
        let t = joint_sic_trial(&[], true, 1.0, 1.0, 0.5);
        assert!(t.embb_decoded);
        let t = joint_sic_trial(&[3.0, 1.0], true, 1.0, 1.0, 0.5);
        assert_eq!((t.n_decoded_mmtc, t.embb_decoded), (2, true));
        let t = joint_sic_trial(&[3.0, 1.0], true, 1.0, 2.0, 1.0);
        assert_eq!((t.n_decoded_mmtc, t.embb_decoded), (1, false));
        let t = joint_sic_trial(&[1.0, 3.0], false, 1.0, 2.0, 1.0);
        assert_eq!((t.n_decoded_mmtc, t.embb_decoded), (2, false));
    }

    #[test]
    fn embb_decode_resumes_orthogonal_sic() {
        // Device 1 fails under eMBB interference (2/(1+5+0.1) < 1) but
        // passes once the eMBB signal is gone (2/1.1 ≥ 1).
        let t = joint_sic_trial(&[2.0, 0.1], true, 5.0, 0.5, 1.0);
        assert!(t.embb_decoded);
        assert_eq!(t.n_decoded_mmtc, 1);
    }

    #[test]
    fn erlang_two_closed_form() {
        for t in [0.1, 1.0, 3.0, 7.5] {
            let exact = (1.0 + t) * f64::exp(-t);
            assert!((erlang_tail(2, t, 1.0) - exact).abs() < 1e-14);
        }
        assert_eq!(erlang_tail(0, 1.0, 1.0), 0.0);
        assert_eq!(erlang_tail(3, 0.0, 1.0), 1.0);
    }

    #[test]
    fn erlang_two_matches_monte_carlo() {
        let plan = McPlan::new(200_000, 11).unwrap();
        let t = 2.5;
        let p = plan.probability(|rng| sample_exp_gain(1.0, rng) + sample_exp_gain(1.0, rng) >= t);
        let exact = (1.0 + t) * f64::exp(-t);
        let se = (exact * (1.0 - exact) / 200_000.0).sqrt();
        assert!((p - exact).abs() < 3.0 * se, "{p} vs {exact}");
    }

    #[test]
    fn table_matches_explicit_trials() {
        let cfg = fig7();
        let targets = [0.5, 5.0, 80.0];
        let rates = [0.0, 0.5, 2.0, 5.0, 8.0];
        let n_max = 12;
        let plan = McPlan::new(300, 5).unwrap();
        let table = JointTable::build(&cfg, &targets, &rates, n_max, &plan).unwrap();
        // Regenerate the same paths and count explicitly.
        let tp = table_plan(&plan);
        let mut succ = vec![0u64; targets.len() * (n_max + 1) * rates.len()];
        let mut decoded = succ.clone();
        for b in 0..tp.n_batches() {
            let mut rng = tp.stream(b);
            for _ in 0..tp.batch_len(b) {
                let gains: Vec<f64> = (0..n_max).map(|_| sample_exp_gain(cfg.gamma_m, &mut rng)).collect();
                for n in 1..=n_max {
                    for (i, &g) in targets.iter().enumerate() {
                        for (j, &r) in rates.iter().enumerate() {
                            let t = joint_sic_trial(&gains[..n], true, g, r, cfg.r_m);
                            let k = (i * (n_max + 1) + n) * rates.len() + j;
                            succ[k] += u64::from(t.embb_decoded);
                            decoded[k] += t.n_decoded_mmtc as u64;
                        }
                    }
                }
            }
        }
        for i in 0..targets.len() {
            for n in 1..=n_max {
                for j in 0..rates.len() {
                    let k = (i * (n_max + 1) + n) * rates.len() + j;
                    let cell = table.cell(i, n, j);
                    assert_eq!(cell.succ as u64, succ[k], "succ i={i} n={n} j={j}");
                    assert_eq!(table.sic[i].sum[n] + cell.gain as u64, decoded[k], "decoded i={i} n={n} j={j}");
                }
            }
        }
    }

    #[test]
    fn zero_embb_rate_reduces_to_orthogonal() {
        let cfg = fig7();
        let plan = McPlan::new(2000, 9).unwrap();
        let targets = PolicyGrid::default().targets(cfg.gamma_b, cfg.eps_b).unwrap();
        let table = JointTable::build(&cfg, &targets, &[0.0, 1.0], 60, &plan).unwrap();
        for lam in [1.0, 5.0, 12.0] {
            for i in 0..targets.len() {
                assert_eq!(table.embb_failure(i, 0, lam).value, table.embb_failure(0, 0, lam).value);
                let e = table.mmtc_error(i, 0, lam, 0.999);
                let o = 1.0 - table.decoded_fraction_orth(lam).value;
                assert!((e.value - o).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn noma_rates_at_zero_load() {
        let cfg = fig7();
        let plan = McPlan::new(20_000, 4).unwrap();
        let pol = EmbbPolicy::with_activation(cfg.gamma_b, 0.9995, 10.0).unwrap();
        let e = noma_error_rates(0.0, 1.0, &pol, &cfg, &plan).unwrap();
        assert_eq!(e.mmtc, 0.0);
        let se = (0.0005f64 * 0.9995 / 20_000.0).sqrt();
        assert!((e.embb - 0.0005).abs() < 4.0 * se + 1e-12);
        let e = noma_error_rates(0.0, 10.0, &pol, &cfg, &plan).unwrap();
        assert_eq!(e.embb, 1.0);
    }

    #[test]
    fn noma_rates_at_zero_embb_rate_match_orthogonal() {
        let cfg = fig7();
        let plan = McPlan::new(40_000, 4).unwrap();
        let pol = EmbbPolicy::with_activation(cfg.gamma_b, 0.999, 1.0).unwrap();
        let e = noma_error_rates(6.0, 0.0, &pol, &cfg, &plan).unwrap();
        let o = error_rate_orth(6.0, cfg.r_m, cfg.gamma_m, &plan.salted(1));
        assert!((e.mmtc - o).abs() < 0.01, "{} vs {o}", e.mmtc);
        assert!(e.embb >= 1.0 - pol.a_b - 1e-12);
    }

    #[test]
    fn chi_bound_at_zero_load() {
        let cfg = fig7();
        let plan = McPlan::new(500, 2).unwrap();
        let g = 3.0;
        let table = JointTable::build(&cfg, &[g], &[1.0, 2.0, 3.0], 10, &plan).unwrap();
        let a = table.activation_caps[0];
        assert!((table.chi_bound(0, 0, 0.0).value - (1.0 - a)).abs() < 1e-15);
        // log2(1 + 3) = 2, so the empty interference sum already forces an
        // error from r_b = 2 on.
        assert_eq!(table.chi_bound(0, 1, 0.0).value, 1.0);
        assert_eq!(table.chi_bound(0, 2, 0.0).value, 1.0);
    }

    #[test]
    fn erlang_bound_at_zero_load() {
        let cfg = fig7();
        let q = ErlangBound::new(&cfg, &PolicyGrid::new(vec![0.01, 1.0]).unwrap()).unwrap();
        assert!((q.embb_error(1.0, 0.0) - cfg.eps_b).abs() < 1e-12);
        assert_eq!(q.embb_error(100.0, 0.0), 1.0);
    }
}
