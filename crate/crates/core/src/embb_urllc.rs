//! Rate regions `(r_B sum, r_U)` for eMBB and URLLC sharing `F` channels.
//!
//! H-OMA splits the channels: `F − F_U` carry eMBB at `r_B^orth` each and
//! URLLC spreads over the remaining `F_U`. H-NOMA lets the eMBB use all `F`
//! channels; URLLC is decoded first, treating the eMBB as noise, and then
//! cancelled (SIC), or the eMBB decoder erases the minislots hit by URLLC
//! and relies on an outer erasure code of depth `k` (puncturing).

use std::f64::consts::LN_2;

use log::warn;

use crate::config::ScenarioConfig;
use crate::embb::{orth_rate, target_cap_for_activation, threshold_for_activation, EmbbPolicy};
use crate::error::{Error, Result};
use crate::mc::McPlan;
use crate::region::{RegionCurve, RegionPoint, Scheme};
use crate::search::{max_feasible, SearchBracket};
use crate::special::binomial_pmf;
use crate::stats::{order_statistic_band, Estimate, Z_CI};
use crate::urllc::{
    check_trials, default_t_grid, interference_thresholds, max_outages, max_rate_estimate, rate_lower_bound_markov,
    Interference, ThresholdSet,
};

const AXES: (&str, &str) = ("r_b_sum", "r_u");

/// How the URLLC receiver models eMBB activity in H-NOMA.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InterferenceModel {
    /// The eMBB interferes on every channel.
    #[default]
    AlwaysOn,
    /// Per-channel Bernoulli activity, searched over a grid of activation
    /// probabilities.
    Bernoulli,
}

/// Orthogonal split: one point per `F_U ∈ {0, …, F}`.
pub fn oma_region(cfg: &ScenarioConfig, plan: &McPlan) -> Result<RegionCurve> {
    let policy = EmbbPolicy::orthogonal(cfg.gamma_b, cfg.eps_b)?;
    let r_b = orth_rate(cfg.gamma_b, cfg.eps_b)?;
    let mut curve = RegionCurve::new(Scheme::HOma, AXES);
    let mut pts = Vec::with_capacity(cfg.f + 1);
    for f_u in 0..=cfg.f {
        let r_u = if f_u == 0 {
            Estimate::exact(0.0)
        } else {
            max_rate_estimate(f_u, cfg.gamma_u, cfg.eps_u, Interference::None, plan)?
        };
        pts.push(
            RegionPoint::new((cfg.f - f_u) as f64 * r_b, r_u.value)
                .with("f_u", f_u as f64)
                .with("r_u_lo", r_u.lo)
                .with("r_u_hi", r_u.hi)
                .with("g_tar", policy.g_tar)
                .with("g_min", policy.g_min)
                .with("a_b", policy.a_b)
                .with("trials", plan.trials as f64),
        );
    }
    curve.extend(pts);
    Ok(curve)
}

/// Largest eMBB sum-rate H-OMA offers at URLLC rate `r_u`, using either the
/// central (`r_u` column) or lower (`r_u_lo`) URLLC estimates.
pub fn oma_rate_at(curve: &RegionCurve, r_u: f64, lower_band: bool) -> Option<f64> {
    curve
        .points
        .iter()
        .filter(|p| {
            let y = if lower_band { p.diag("r_u_lo").unwrap_or(p.y) } else { p.y };
            y >= r_u
        })
        .map(|p| p.x)
        .reduce(f64::max)
}

/// Minimum eMBB activation probability under SIC given the URLLC error
/// probability `urllc_err`.
pub fn sic_ab_constraint_at(cfg: &ScenarioConfig, urllc_err: f64) -> Result<f64> {
    let hit = 1.0 - (1.0 - cfg.a_u).powi(cfg.s as i32);
    let a = (1.0 - cfg.eps_b) / (1.0 - urllc_err * hit);
    if !(a < 1.0) {
        return Err(Error::Infeasible(format!(
            "eMBB activation {a} >= 1 needed to meet eps_b = {}",
            cfg.eps_b
        )));
    }
    Ok(a)
}

/// `a_B ≥ (1−ε_B)/(1−ε_U(1−(1−a_U)^S))`: the right-hand side.
pub fn sic_ab_constraint(cfg: &ScenarioConfig) -> Result<f64> {
    sic_ab_constraint_at(cfg, cfg.eps_u)
}

/// Upper bound on the eMBB error probability under SIC at activation `a_b`.
pub fn sic_embb_error_bound(a_b: f64, cfg: &ScenarioConfig) -> f64 {
    let quiet = (1.0 - cfg.a_u).powi(cfg.s as i32);
    quiet * (1.0 - a_b) + (1.0 - quiet) * (cfg.eps_u + (1.0 - cfg.eps_u) * (1.0 - a_b))
}

fn sum_rate(f: usize, g: f64) -> f64 {
    f as f64 * g.ln_1p() / LN_2
}

/// URLLC-side state shared by the SIC and puncturing points at one `r_u`.
#[derive(Debug, Clone)]
pub struct UrllcFrontier {
    pub r_u: f64,
    pub thresholds: ThresholdSet,
    /// Largest tolerated outage count and its confidence band.
    pub k_max: u64,
    pub k_lo: u64,
    pub k_hi: u64,
}

impl UrllcFrontier {
    /// Runs the threshold pass with the eMBB always interfering. The search
    /// range is capped by the largest power-feasible target, reached at
    /// activation `1 − ε_B`.
    pub fn compute(r_u: f64, cfg: &ScenarioConfig, plan: &McPlan) -> Result<Self> {
        check_trials(cfg.eps_u, plan)?;
        if cfg.eps_u * (plan.trials as f64) < 1000.0 {
            warn!("only {:.0} expected URLLC outages; estimates will be noisy", cfg.eps_u * plan.trials as f64);
        }
        let g_max = target_cap_for_activation(1.0 - cfg.eps_b, cfg.gamma_b)?;
        let n = plan.trials;
        let k_max = max_outages(n, cfg.eps_u);
        let (lo, hi) = order_statistic_band(n as usize, k_max as usize + 1, Z_CI);
        let keep = hi + 2;
        let thresholds = interference_thresholds(r_u, cfg.f, cfg.gamma_u, None, g_max, keep, plan);
        Ok(UrllcFrontier { r_u, thresholds, k_max, k_lo: lo as u64 - 1, k_hi: hi as u64 - 1 })
    }

    /// Largest interference meeting the URLLC target alone.
    pub fn max_interference(&self, k: u64) -> Option<f64> {
        self.thresholds.max_interference(k)
    }

    /// Largest `g` with at most `k` outages and `g` within the power cap
    /// for the activation implied by the empirical URLLC error at `g`.
    fn sic_target(&self, cfg: &ScenarioConfig, k: u64) -> Result<Option<(f64, f64, bool)>> {
        let t = &self.thresholds;
        if t.always_out > k {
            return Ok(None);
        }
        let n = t.trials as f64;
        let mut best: Option<(f64, f64, bool)> = None;
        for j in 0..=(k - t.always_out) as usize {
            let lower = if j == 0 { 0.0 } else { t.smallest.get(j - 1).copied().unwrap_or(t.g_max) };
            let upper = t.smallest.get(j).copied().unwrap_or(t.g_max).min(t.g_max);
            let p = (t.always_out + j as u64) as f64 / n;
            let a = match sic_ab_constraint_at(cfg, p) {
                Ok(a) => a,
                Err(_) => break,
            };
            let cap = target_cap_for_activation(a, cfg.gamma_b)?;
            let g = upper.min(cap);
            if (j == 0 || g > lower) && best.is_none_or(|b| g > b.0) {
                best = Some((g, a, cap <= upper));
            }
            if cap <= upper || upper >= t.g_max {
                break;
            }
        }
        Ok(best)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SicPoint {
    pub r_u: f64,
    pub r_b_sum: Estimate,
    pub g_tar: f64,
    pub a_b: f64,
    pub g_min: f64,
    /// Power cap (rather than URLLC reliability) limits the target.
    pub power_bound: bool,
    /// Sum-rate when the activation constraint uses `ε_U` itself rather
    /// than the URLLC error actually achieved.
    pub r_b_sum_eps_u: f64,
}

/// H-NOMA with SIC at URLLC rate `r_u`. `Ok(None)` when `r_u` exceeds
/// what URLLC can sustain even without interference.
pub fn noma_sic_point(r_u: f64, cfg: &ScenarioConfig, plan: &McPlan) -> Result<Option<SicPoint>> {
    let fr = UrllcFrontier::compute(r_u, cfg, plan)?;
    sic_point_from(&fr, cfg)
}

fn sic_point_from(fr: &UrllcFrontier, cfg: &ScenarioConfig) -> Result<Option<SicPoint>> {
    let Some((g, a, power_bound)) = fr.sic_target(cfg, fr.k_max)? else {
        return Ok(None);
    };
    let lo = fr.sic_target(cfg, fr.k_lo)?.map_or(0.0, |x| x.0);
    let hi = fr.sic_target(cfg, fr.k_hi)?.map_or(g, |x| x.0);
    let strict_cap = target_cap_for_activation(sic_ab_constraint(cfg)?, cfg.gamma_b)?;
    let g_eps = fr.max_interference(fr.k_max).unwrap_or(0.0).min(strict_cap);
    Ok(Some(SicPoint {
        r_u: fr.r_u,
        r_b_sum: Estimate { value: sum_rate(cfg.f, g), lo: sum_rate(cfg.f, lo.min(g)), hi: sum_rate(cfg.f, hi.max(g)) },
        g_tar: g,
        a_b: a,
        g_min: threshold_for_activation(a, cfg.gamma_b),
        power_bound,
        r_b_sum_eps_u: sum_rate(cfg.f, g_eps),
    }))
}

/// H-NOMA with SIC under per-channel Bernoulli eMBB activity, searched over
/// 16 activation probabilities from the SIC minimum up to 1.
pub fn noma_sic_point_bernoulli(r_u: f64, cfg: &ScenarioConfig, plan: &McPlan) -> Result<Option<SicPoint>> {
    check_trials(cfg.eps_u, plan)?;
    let a_min = sic_ab_constraint(cfg)?;
    let n = plan.trials;
    let k_max = max_outages(n, cfg.eps_u);
    let (lo, hi) = order_statistic_band(n as usize, k_max as usize + 1, Z_CI);
    let mut best: Option<SicPoint> = None;
    for j in 0..16 {
        let a = a_min + (1.0 - a_min) * j as f64 / 16.0;
        let cap = target_cap_for_activation(a, cfg.gamma_b)?;
        let set = interference_thresholds(r_u, cfg.f, cfg.gamma_u, Some(a), cap, hi + 2, plan);
        let Some(g_u) = set.max_interference(k_max) else { continue };
        let g = g_u.min(cap);
        let g_lo = set.max_interference(lo as u64 - 1).unwrap_or(0.0).min(cap);
        let g_hi = set.max_interference(hi as u64 - 1).unwrap_or(g).min(cap);
        if best.as_ref().is_none_or(|b| g > b.g_tar) {
            best = Some(SicPoint {
                r_u,
                r_b_sum: Estimate { value: sum_rate(cfg.f, g), lo: sum_rate(cfg.f, g_lo), hi: sum_rate(cfg.f, g_hi) },
                g_tar: g,
                a_b: a,
                g_min: threshold_for_activation(a, cfg.gamma_b),
                power_bound: cap <= g_u,
                r_b_sum_eps_u: sum_rate(cfg.f, g),
            });
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PuncturePoint {
    pub r_u: f64,
    pub r_b_sum: Estimate,
    pub k: usize,
    pub a_b: f64,
    pub g_tar: f64,
}

/// Activation probability meeting `ε_B` with erasure-code depth `k`, or
/// `None` when the URLLC puncturing pattern alone exceeds `ε_B`.
pub fn puncture_activation(cfg: &ScenarioConfig, k: usize) -> Option<f64> {
    let pmf = binomial_pmf(cfg.s, cfg.a_u);
    let covered: f64 = pmf[..=k.min(cfg.s)].iter().sum();
    let tail = (1.0 - covered).max(0.0);
    if tail >= cfg.eps_b {
        return None;
    }
    Some(1.0 - (cfg.eps_b - tail) / covered)
}

/// H-NOMA with puncturing at URLLC rate `r_u`, optimized over `k`.
pub fn noma_puncture_point(r_u: f64, cfg: &ScenarioConfig, plan: &McPlan) -> Result<Option<PuncturePoint>> {
    let fr = UrllcFrontier::compute(r_u, cfg, plan)?;
    puncture_point_from(&fr, cfg)
}

fn puncture_point_from(fr: &UrllcFrontier, cfg: &ScenarioConfig) -> Result<Option<PuncturePoint>> {
    let Some(g_u) = fr.max_interference(fr.k_max) else {
        return Ok(None);
    };
    let g_lo = fr.max_interference(fr.k_lo).unwrap_or(0.0);
    let g_hi = fr.max_interference(fr.k_hi).unwrap_or(g_u);
    let mut best: Option<PuncturePoint> = None;
    for k in 0..=cfg.s {
        let Some(a) = puncture_activation(cfg, k) else { continue };
        let cap = target_cap_for_activation(a, cfg.gamma_b)?;
        let scale = 1.0 - k as f64 / cfg.s as f64;
        let rate = |g: f64| scale * sum_rate(cfg.f, g.min(cap));
        let value = rate(g_u);
        if best.as_ref().is_none_or(|b| value > b.r_b_sum.value) {
            best = Some(PuncturePoint {
                r_u: fr.r_u,
                r_b_sum: Estimate { value, lo: rate(g_lo), hi: rate(g_hi) },
                k,
                a_b: a,
                g_tar: g_u.min(cap),
            });
        }
    }
    if best.is_none() {
        return Err(Error::Infeasible(format!(
            "no erasure-code depth keeps the URLLC puncturing probability below eps_b = {}",
            cfg.eps_b
        )));
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundPoint {
    pub r_u: f64,
    pub r_b_sum: f64,
    pub g_tar: f64,
    pub t: f64,
}

/// Largest target whose Markov lower bound on the URLLC rate still reaches
/// `r_u`, within the power cap of the SIC activation constraint.
pub fn markov_lower_bound_point(r_u: f64, cfg: &ScenarioConfig) -> Result<Option<LowerBoundPoint>> {
    let cap = target_cap_for_activation(sic_ab_constraint(cfg)?, cfg.gamma_b)?;
    let grid = default_t_grid();
    let bound = |g: f64| rate_lower_bound_markov(cfg.gamma_u, cfg.eps_u, cfg.f, g, &grid);
    let reaches = |g: f64| bound(g).map(|b| b.rate >= r_u).unwrap_or(false);
    let bracket = SearchBracket::new(0.0, cap).with_tol(1e-9 * cap);
    let Some(g) = max_feasible(reaches, bracket)? else {
        return Ok(None);
    };
    Ok(Some(LowerBoundPoint { r_u, r_b_sum: sum_rate(cfg.f, g), g_tar: g, t: bound(g)?.t }))
}

/// Default URLLC-rate grid: 33 points evenly spaced on `[0, r_U^orth(F)]`.
pub fn default_r_u_grid(cfg: &ScenarioConfig, plan: &McPlan) -> Result<Vec<f64>> {
    let top = max_rate_estimate(cfg.f, cfg.gamma_u, cfg.eps_u, Interference::None, plan)?.value;
    Ok((0..33).map(|i| top * i as f64 / 32.0).collect())
}

#[derive(Debug, Clone)]
pub struct NomaRegion {
    pub sic: RegionCurve,
    pub puncture: RegionCurve,
    pub lower_bound: RegionCurve,
}

/// SIC, puncturing and Markov lower-bound curves on a shared `r_u` grid.
/// All grid points reuse the same Monte Carlo draws.
pub fn region_noma(cfg: &ScenarioConfig, plan: &McPlan, r_u_grid: &[f64], model: InterferenceModel) -> Result<NomaRegion> {
    let mut sic = RegionCurve::new(Scheme::HNomaSic, AXES);
    let mut puncture = RegionCurve::new(Scheme::HNomaPuncture, AXES);
    let mut lower_bound = RegionCurve::new(Scheme::AppendixALb, AXES);
    let mut sic_pts = Vec::new();
    let mut pun_pts = Vec::new();
    let mut lb_pts = Vec::new();
    for &r_u in r_u_grid {
        let fr = UrllcFrontier::compute(r_u, cfg, plan)?;
        let s = match model {
            InterferenceModel::AlwaysOn => sic_point_from(&fr, cfg)?,
            InterferenceModel::Bernoulli => noma_sic_point_bernoulli(r_u, cfg, plan)?,
        };
        match s {
            Some(p) => sic_pts.push(
                RegionPoint::new(p.r_b_sum.value, r_u)
                    .with("r_b_lo", p.r_b_sum.lo)
                    .with("r_b_hi", p.r_b_sum.hi)
                    .with("g_tar", p.g_tar)
                    .with("g_min", p.g_min)
                    .with("a_b", p.a_b)
                    .with("power_bound", p.power_bound as u8 as f64)
                    .with("r_b_eps_u_constraint", p.r_b_sum_eps_u)
                    .with("f_u", cfg.f as f64)
                    .with("trials", plan.trials as f64),
            ),
            None => sic.notes.push(format!("r_u = {r_u:.6}: infeasible")),
        }
        match puncture_point_from(&fr, cfg) {
            Ok(Some(p)) => pun_pts.push(
                RegionPoint::new(p.r_b_sum.value, r_u)
                    .with("r_b_lo", p.r_b_sum.lo)
                    .with("r_b_hi", p.r_b_sum.hi)
                    .with("g_tar", p.g_tar)
                    .with("g_min", threshold_for_activation(p.a_b, cfg.gamma_b))
                    .with("a_b", p.a_b)
                    .with("k", p.k as f64)
                    .with("f_u", cfg.f as f64)
                    .with("trials", plan.trials as f64),
            ),
            Ok(None) => puncture.notes.push(format!("r_u = {r_u:.6}: infeasible")),
            Err(Error::Infeasible(m)) => puncture.notes.push(m),
            Err(e) => return Err(e),
        }
        match markov_lower_bound_point(r_u, cfg)? {
            Some(p) => lb_pts.push(
                RegionPoint::new(p.r_b_sum, r_u)
                    .with("g_tar", p.g_tar)
                    .with("t", p.t)
                    .with("f_u", cfg.f as f64),
            ),
            None => lower_bound.notes.push(format!("r_u = {r_u:.6}: bound below target at zero interference")),
        }
    }
    sic.extend(sic_pts);
    puncture.extend(pun_pts);
    lower_bound.extend(lb_pts);
    Ok(NomaRegion { sic, puncture, lower_bound })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig4() -> ScenarioConfig {
        ScenarioConfig {
            gamma_b: 10.0,
            gamma_u: 100.0,
            gamma_m: 3.1623,
            eps_b: 1e-3,
            eps_u: 1e-5,
            eps_m: 0.1,
            f: 10,
            f_u: 0,
            s: 5,
            a_u: 0.1,
            r_m: 0.04,
            n_per_resource: None,
        }
    }

    #[test]
    fn ab_constraint_examples() {
        let cfg = fig4();
        let a = sic_ab_constraint(&cfg).unwrap();
        assert!((a - 0.999_004_1).abs() < 5e-8, "{a}");
        assert!((sic_embb_error_bound(a, &cfg) - cfg.eps_b).abs() < 1e-12);
        let no_urllc = ScenarioConfig { a_u: 0.0, ..fig4() };
        assert_eq!(sic_ab_constraint(&no_urllc).unwrap(), 1.0 - cfg.eps_b);
        assert!((sic_embb_error_bound(0.7, &no_urllc) - 0.3).abs() < 1e-15);
        let perfect = ScenarioConfig { eps_u: 0.0, ..fig4() };
        assert_eq!(sic_ab_constraint(&perfect).unwrap(), 1.0 - cfg.eps_b);
    }

    #[test]
    fn degenerate_error_bound() {
        let cfg = ScenarioConfig { eps_u: 1.0, a_u: 1.0, ..fig4() };
        assert!((sic_embb_error_bound(0.9, &cfg) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn puncture_activation_without_urllc() {
        let cfg = ScenarioConfig { a_u: 0.0, ..fig4() };
        assert!((puncture_activation(&cfg, 0).unwrap() - (1.0 - cfg.eps_b)).abs() < 1e-15);
        // S = 5, a_U = 0.1 needs k ≥ 3: Pr(Bin(5, 0.1) > 2) = 0.00856 > 1e-3.
        assert!(puncture_activation(&fig4(), 2).is_none());
        assert!(puncture_activation(&fig4(), 3).is_some());
    }

    #[test]
    fn zero_rate_sic_matches_full_power() {
        let cfg = ScenarioConfig { eps_u: 1e-3, ..fig4() };
        let plan = McPlan::new(200_000, 11).unwrap();
        let p = noma_sic_point(0.0, &cfg, &plan).unwrap().unwrap();
        let full = cfg.f as f64 * orth_rate(cfg.gamma_b, cfg.eps_b).unwrap();
        assert!((p.r_b_sum.value - full).abs() < 1e-9, "{} vs {full}", p.r_b_sum.value);
        assert!(p.power_bound);
    }

    #[test]
    fn puncturing_picks_partial_depth() {
        let cfg = ScenarioConfig { eps_u: 1e-3, ..fig4() };
        let fr = UrllcFrontier::compute(0.5, &cfg, &McPlan::new(100_000, 1).unwrap()).unwrap();
        let p = puncture_point_from(&fr, &cfg).unwrap().unwrap();
        assert!(p.k < cfg.s);
    }
}
