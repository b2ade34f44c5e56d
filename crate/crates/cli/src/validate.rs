//! Closed-form checks run by `slicing validate`.

use slicing_core::embb::{max_target_snr, orth_rate, simulate_link, threshold_snr, EmbbPolicy};
use slicing_core::embb_mmtc::erlang_tail;
use slicing_core::mmtc::{sinr_threshold, OrthTable};
use slicing_core::special::{exp_integral_e1, exp_integral_e1_inv};
use slicing_core::urllc::{markov_expectation, max_rate_estimate, single_channel_rate, Interference};
use slicing_core::{McPlan, Result};

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn check(name: &'static str, pass: bool, detail: String) -> Check {
    Check { name, pass, detail }
}

pub fn run(plan: &McPlan) -> Result<Vec<Check>> {
    let mut out = Vec::new();

    let e1 = exp_integral_e1(1.0)?;
    let e1_small = exp_integral_e1(0.0010005)?;
    out.push(check(
        "e1_reference",
        rel(e1, 0.219_383_934_395_520_5) < 1e-13 && rel(e1_small, 6.331_039_988_844_519) < 1e-13,
        format!("E1(1) = {e1:.16}, E1(0.0010005) = {e1_small:.16}"),
    ));

    let mut worst = 0.0f64;
    for y in [0.01, 0.5, 1.0, 6.0, 15.0] {
        worst = worst.max(rel(exp_integral_e1(exp_integral_e1_inv(y)?)?, y));
    }
    out.push(check("e1_inverse", worst < 1e-10, format!("max rel round-trip error {worst:.2e}")));

    let g_tar = max_target_snr(threshold_snr(10.0, 1e-3)?, 10.0)?;
    let r10 = orth_rate(10.0, 1e-3)?;
    let r100 = orth_rate(100.0, 1e-3)?;
    out.push(check(
        "embb_chain",
        rel(g_tar, 1.579_519_406_563_837_4) < 1e-11
            && rel(r10, 1.367_102_300_395_642_2) < 1e-11
            && rel(r100, 4.069_976_560_654_268) < 1e-11,
        format!("G_tar(10) = {g_tar:.12}, r_B(10) = {r10:.12}, r_B(100) = {r100:.12}"),
    ));

    let policy = EmbbPolicy::orthogonal(10.0, 1e-2)?;
    let link = simulate_link(&policy, 10.0, plan);
    let sd = (1e-2 * 0.99 / plan.trials as f64).sqrt();
    out.push(check(
        "embb_outage",
        (link.outage - 1e-2).abs() <= 3.0 * sd,
        format!("simulated outage {:.6} vs 0.01 ({:.2} sd)", link.outage, (link.outage - 1e-2).abs() / sd),
    ));

    let closed = single_channel_rate(100.0, 1e-2);
    let est = max_rate_estimate(1, 100.0, 1e-2, Interference::None, plan)?;
    out.push(check(
        "urllc_single_channel",
        est.lo <= closed && closed <= est.hi,
        format!("closed form {closed:.6} in [{:.6}, {:.6}]", est.lo, est.hi),
    ));

    let m = markov_expectation(1.0, 0.0, 1.0);
    let exact = std::f64::consts::E * e1;
    out.push(check("markov_expectation", rel(m, exact) < 1e-9, format!("{m:.12} vs e*E1(1) = {exact:.12}")));

    let lone = 1.0 - f64::exp(-sinr_threshold(0.04) / 3.1623);
    let table = OrthTable::build(&[0.04], 3.1623, 4, plan);
    let e = table.error(0, 0.0);
    out.push(check(
        "mmtc_lone_device",
        e.lo <= lone && lone <= e.hi,
        format!("closed form {lone:.6} in [{:.6}, {:.6}]", e.lo, e.hi),
    ));

    let worst = [0.1, 1.0, 3.0, 10.0]
        .iter()
        .map(|&t| (erlang_tail(1, t, 2.0) - (-t / 2.0f64).exp()).abs())
        .fold(0.0, f64::max);
    out.push(check("erlang_tail", worst < 1e-14, format!("max abs error vs exp(-t/gamma) {worst:.2e}")));

    Ok(out)
}
