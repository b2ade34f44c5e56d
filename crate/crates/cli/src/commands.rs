//! One function per subcommand. Each returns the tables and plots it
//! produced; writing them is left to the caller.

use slicing_core::embb::{orth_rate, simulate_link, EmbbPolicy};
use slicing_core::embb_mmtc::{region_mmtc, MmtcRegionOptions};
use slicing_core::embb_urllc::{default_r_u_grid, oma_region, region_noma, InterferenceModel};
use slicing_core::mmtc::{max_arrival_orth_estimate, pilot_arrival_limit};
use slicing_core::urllc::{max_rate_estimate, single_channel_rate, Interference};
use slicing_core::{Error, McPlan, RegionCurve, Result, ScenarioConfig, SearchBracket};

use crate::output::Table;
use crate::plot::{Plot, Series};

#[derive(Debug, Default)]
pub struct Artifacts {
    pub tables: Vec<(String, Table)>,
    pub plots: Vec<(String, Plot)>,
}

fn series(curve: &RegionCurve, dashed: bool) -> Series {
    Series { label: curve.scheme.tag().to_string(), points: curve.points.iter().map(|p| (p.x, p.y)).collect(), dashed }
}

/// Empty tables standing in for a scenario without any feasible point.
pub fn infeasible(files: &[(&str, &str)], reason: &str) -> Artifacts {
    let tables = files
        .iter()
        .map(|&(name, title)| {
            let t = Table {
                title: title.to_string(),
                columns: vec!["x".into(), "y".into()],
                rows: Vec::new(),
                notes: vec![format!("infeasible: {reason}")],
            };
            (name.to_string(), t)
        })
        .collect();
    Artifacts { tables, plots: Vec::new() }
}

pub const EMBB_URLLC_FILES: &[(&str, &str)] = &[
    ("oma.csv", "H-OMA"),
    ("noma_sic.csv", "H-NOMA-SIC"),
    ("noma_puncture.csv", "H-NOMA-PUNCTURE"),
    ("appendix_a_lb.csv", "APPENDIX-A-LB"),
];

pub fn embb_urllc(cfg: &ScenarioConfig, plan: &McPlan) -> Result<Artifacts> {
    let grid = default_r_u_grid(cfg, plan)?;
    let oma = oma_region(cfg, plan)?;
    let noma = region_noma(cfg, plan, &grid, InterferenceModel::AlwaysOn)?;
    let curves = [&oma, &noma.sic, &noma.puncture, &noma.lower_bound];
    let tables = EMBB_URLLC_FILES.iter().zip(curves).map(|(f, c)| (f.0.to_string(), Table::from_curve(c))).collect();
    let plot = Plot {
        title: format!("eMBB / URLLC, F = {}", cfg.f),
        x_label: "eMBB sum rate r_B [bit/symbol]".into(),
        y_label: "URLLC rate r_U [bit/symbol]".into(),
        series: vec![series(&oma, false), series(&noma.sic, false), series(&noma.puncture, false), series(&noma.lower_bound, true)],
    };
    Ok(Artifacts { tables, plots: vec![("embb_urllc.svg".into(), plot)] })
}

pub const EMBB_MMTC_FILES: &[(&str, &str)] = &[
    ("oma.csv", "H-OMA"),
    ("noma.csv", "H-NOMA-SIC"),
    ("appendix_b_ub.csv", "APPENDIX-B-UB"),
    ("appendix_b_lb.csv", "APPENDIX-B-LB"),
    ("appendix_b_ub_orth.csv", "APPENDIX-B-UB"),
];

pub fn embb_mmtc(cfg: &ScenarioConfig, plan: &McPlan) -> Result<Artifacts> {
    let reg = region_mmtc(cfg, plan, &MmtcRegionOptions::default())?;
    let curves = [&reg.oma, &reg.noma, &reg.chi_upper, &reg.erlang.lower, &reg.erlang.upper];
    let tables = EMBB_MMTC_FILES.iter().zip(curves).map(|(f, c)| (f.0.to_string(), Table::from_curve(c))).collect();
    let plot = Plot {
        title: format!("eMBB / mMTC, Γ_B = {:.2}, ε_B = {:e}", cfg.gamma_b, cfg.eps_b),
        x_label: "eMBB rate r_B [bit/symbol]".into(),
        y_label: "mMTC arrival rate λ_M".into(),
        series: vec![series(&reg.oma, false), series(&reg.noma, false), series(&reg.chi_upper, true), series(&reg.erlang.lower, true)],
    };
    Ok(Artifacts { tables, plots: vec![("embb_mmtc.svg".into(), plot)] })
}

pub const SINGLE_SERVICE_FILES: &[(&str, &str)] = &[("embb.csv", "eMBB"), ("urllc.csv", "URLLC"), ("mmtc.csv", "mMTC")];

pub fn single_service(cfg: &ScenarioConfig, plan: &McPlan) -> Result<Artifacts> {
    let policy = EmbbPolicy::orthogonal(cfg.gamma_b, cfg.eps_b)?;
    let link = simulate_link(&policy, cfg.gamma_b, plan);
    let embb = Table {
        title: "eMBB".into(),
        columns: ["gamma_b", "eps_b", "g_min", "g_tar", "a_b", "r_b_orth", "sim_outage", "sim_mean_power"]
            .map(String::from)
            .to_vec(),
        rows: vec![[
            cfg.gamma_b,
            cfg.eps_b,
            policy.g_min,
            policy.g_tar,
            policy.a_b,
            orth_rate(cfg.gamma_b, cfg.eps_b)?,
            link.outage,
            link.mean_power,
        ]
        .map(Some)
        .to_vec()],
        notes: Vec::new(),
    };

    let mut urllc = Table {
        title: "URLLC".into(),
        columns: ["f_u", "r_u", "r_u_lo", "r_u_hi", "closed_form"].map(String::from).to_vec(),
        ..Table::default()
    };
    let mut pts = Vec::with_capacity(cfg.f);
    for f_u in 1..=cfg.f {
        let e = max_rate_estimate(f_u, cfg.gamma_u, cfg.eps_u, Interference::None, plan)?;
        let closed = (f_u == 1).then(|| single_channel_rate(cfg.gamma_u, cfg.eps_u));
        urllc.rows.push(vec![Some(f_u as f64), Some(e.value), Some(e.lo), Some(e.hi), closed]);
        pts.push((f_u as f64, e.value));
    }

    let hi = pilot_arrival_limit(cfg.r_m, cfg.eps_m, cfg.gamma_m, plan)?;
    let lam = max_arrival_orth_estimate(cfg.r_m, cfg.eps_m, cfg.gamma_m, plan, SearchBracket::new(0.0, hi))?
        .ok_or_else(|| Error::Infeasible(format!("no positive mMTC load meets eps_m = {}", cfg.eps_m)))?;
    let mmtc = Table {
        title: "mMTC".into(),
        columns: ["r_m", "eps_m", "lambda", "lambda_lo", "lambda_hi"].map(String::from).to_vec(),
        rows: vec![[cfg.r_m, cfg.eps_m, lam.value, lam.lo, lam.hi].map(Some).to_vec()],
        notes: Vec::new(),
    };

    let plot = Plot {
        title: format!("URLLC frequency diversity, Γ_U = {:.2}", cfg.gamma_u),
        x_label: "channels F_U".into(),
        y_label: "URLLC rate r_U [bit/symbol]".into(),
        series: vec![Series { label: "H-OMA".into(), points: pts, dashed: false }],
    };
    Ok(Artifacts {
        tables: vec![("embb.csv".into(), embb), ("urllc.csv".into(), urllc), ("mmtc.csv".into(), mmtc)],
        plots: vec![("single_service.svg".into(), plot)],
    })
}
