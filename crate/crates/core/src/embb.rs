//! eMBB truncated power inversion.
//!
//! The device transmits only when its gain clears `g_min`, and then at the
//! power `g_tar / G` that lands the received SNR exactly on `g_tar`. Unit
//! average power bounds `g_tar` by `Γ_B / E1(g_min / Γ_B)`.

use crate::error::{Error, Result};
use crate::mc::{sample_exp_gain, McPlan};
use crate::special::{exp_integral_e1, exp_integral_e1_inv};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbbPolicy {
    pub g_min: f64,
    pub g_tar: f64,
    pub a_b: f64,
    /// Outer erasure-code depth, 0 when unused.
    pub k: usize,
}

impl EmbbPolicy {
    /// Full-power policy meeting `Pr(E_B) = eps_b` on an interference-free channel.
    pub fn orthogonal(gamma_b: f64, eps_b: f64) -> Result<Self> {
        let g_min = threshold_snr(gamma_b, eps_b)?;
        Ok(EmbbPolicy {
            g_min,
            g_tar: max_target_snr(g_min, gamma_b)?,
            a_b: activation_probability(g_min, gamma_b),
            k: 0,
        })
    }

    /// Policy with activation probability `a_b` and target `g_tar`;
    /// rejects targets above the power cap.
    pub fn with_activation(gamma_b: f64, a_b: f64, g_tar: f64) -> Result<Self> {
        if !(a_b > 0.0 && a_b < 1.0) {
            return Err(Error::domain(format!("activation probability must lie in (0,1), got {a_b}")));
        }
        let g_min = threshold_for_activation(a_b, gamma_b);
        let cap = max_target_snr(g_min, gamma_b)?;
        if g_tar > cap * (1.0 + 1e-12) {
            return Err(Error::domain(format!("target SNR {g_tar} exceeds the power cap {cap}")));
        }
        Ok(EmbbPolicy { g_min, g_tar, a_b, k: 0 })
    }
}

/// `G_min = Γ_B ln(1/(1−ε_B))`.
pub fn threshold_snr(gamma_b: f64, eps_b: f64) -> Result<f64> {
    if !(eps_b > 0.0 && eps_b < 1.0) {
        return Err(Error::domain(format!("eps_b must lie in (0,1), got {eps_b}")));
    }
    Ok(-gamma_b * (-eps_b).ln_1p())
}

/// `a_B = exp(−G_min/Γ_B)`.
pub fn activation_probability(g_min: f64, gamma_b: f64) -> f64 {
    (-g_min / gamma_b).exp()
}

/// Inverse of [`activation_probability`].
pub fn threshold_for_activation(a_b: f64, gamma_b: f64) -> f64 {
    -gamma_b * a_b.ln()
}

/// Largest target SNR compatible with unit average power.
pub fn max_target_snr(g_min: f64, gamma_b: f64) -> Result<f64> {
    if g_min <= 0.0 {
        return Err(Error::DegeneratePolicy(
            "g_min = 0: unit average power admits no positive target SNR".into(),
        ));
    }
    Ok(gamma_b / exp_integral_e1(g_min / gamma_b)?)
}

/// Power cap as a function of the activation probability.
pub fn target_cap_for_activation(a_b: f64, gamma_b: f64) -> Result<f64> {
    max_target_snr(threshold_for_activation(a_b, gamma_b), gamma_b)
}

/// Largest activation probability whose power cap still admits `g_tar`.
pub fn activation_cap_for_target(g_tar: f64, gamma_b: f64) -> Result<f64> {
    if g_tar <= 0.0 {
        return Err(Error::domain(format!("target SNR must be positive, got {g_tar}")));
    }
    Ok((-exp_integral_e1_inv(gamma_b / g_tar)?).exp())
}

/// Transmit power at gain `g`.
pub fn instantaneous_power(g: f64, policy: &EmbbPolicy) -> f64 {
    if g >= policy.g_min {
        policy.g_tar / g
    } else {
        0.0
    }
}

/// `r_B^orth = log2(1 + G_tar)` for the full-power policy.
pub fn orth_rate(gamma_b: f64, eps_b: f64) -> Result<f64> {
    Ok(EmbbPolicy::orthogonal(gamma_b, eps_b)?.g_tar.ln_1p() / std::f64::consts::LN_2)
}

/// Monte Carlo link outcome of a policy on an interference-free channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkStats {
    /// Fraction of slots whose received SNR misses `g_tar`.
    pub outage: f64,
    /// Sample mean of the transmit power.
    pub mean_power: f64,
}

/// Draws Rayleigh gains, applies the policy and decodes at `log2(1 + g_tar)`.
pub fn simulate_link(policy: &EmbbPolicy, gamma_b: f64, plan: &McPlan) -> LinkStats {
    // Inversion lands on g_tar only up to rounding.
    let need = policy.g_tar * (1.0 - 1e-12);
    let parts = plan.map_batches(|rng, len, _| {
        let mut out = 0u64;
        let mut power = 0.0;
        for _ in 0..len {
            let g = sample_exp_gain(gamma_b, rng);
            let p = instantaneous_power(g, policy);
            power += p;
            if p * g < need {
                out += 1;
            }
        }
        (out, power)
    });
    let n = plan.trials as f64;
    let outages: u64 = parts.iter().map(|p| p.0).sum();
    let power = parts.iter().fold(0.0, |acc, p| acc + p.1);
    LinkStats { outage: outages as f64 / n, mean_power: power / n }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_examples() {
        assert!((threshold_snr(10.0, 1e-3).unwrap() - 0.010_005_003).abs() < 1e-9);
        assert!((threshold_snr(1.0, 1.0 - (-1f64).exp()).unwrap() - 1.0).abs() < 1e-12);
        assert!(threshold_snr(10.0, 0.0).is_err());
        assert!(threshold_snr(10.0, 1.0).is_err());
    }

    #[test]
    fn activation_round_trip() {
        for &(g, e) in &[(10.0, 1e-3), (316.23, 1e-4), (1.0, 0.3)] {
            let a = activation_probability(threshold_snr(g, e).unwrap(), g);
            assert!((a - (1.0 - e)).abs() < 1e-12);
        }
        assert_eq!(activation_probability(0.0, 5.0), 1.0);
        assert!((activation_probability(5.0, 5.0) - (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn degenerate_threshold_is_an_error() {
        assert!(matches!(max_target_snr(0.0, 10.0), Err(Error::DegeneratePolicy(_))));
    }

    #[test]
    fn power_is_piecewise_inversion() {
        let p = EmbbPolicy::orthogonal(10.0, 1e-3).unwrap();
        assert_eq!(instantaneous_power(p.g_min / 2.0, &p), 0.0);
        assert!((instantaneous_power(p.g_tar, &p) - 1.0).abs() < 1e-15);
        assert!((instantaneous_power(2.0 * p.g_tar, &p) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn activation_cap_inverts_target_cap() {
        let a = 0.9995;
        let cap = target_cap_for_activation(a, 316.23).unwrap();
        let back = activation_cap_for_target(cap, 316.23).unwrap();
        assert!((back - a).abs() < 1e-10, "{back}");
    }

    #[test]
    fn simulated_link_meets_target() {
        let p = EmbbPolicy::orthogonal(10.0, 1e-2).unwrap();
        let plan = McPlan::new(200_000, 5).unwrap();
        let s = simulate_link(&p, 10.0, &plan);
        let sd = (1e-2 * 0.99 / 200_000.0f64).sqrt();
        assert!((s.outage - 1e-2).abs() < 4.0 * sd, "{s:?}");
        assert!((s.mean_power - 1.0).abs() < 0.05, "{s:?}");
    }

    #[test]
    fn orth_rate_grows_with_gain() {
        let mut prev = 0.0;
        for db in [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0] {
            let r = orth_rate(crate::config::db_to_linear(db), 1e-3).unwrap();
            assert!(r > prev);
            prev = r;
        }
    }
}
