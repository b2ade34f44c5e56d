//! `slicing`: runs rate-region experiments and writes CSV tables, SVG
//! plots and a run manifest.
//!
//! Exit codes: 0 on success (an infeasible scenario still exits 0 after a
//! warning), 1 on usage or config errors, 2 on numeric failures.

mod commands;
mod output;
mod plot;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use log::warn;

use slicing_core::{parse_config, Error, McPlan, ScenarioConfig};

use crate::commands::Artifacts;
use crate::output::{OutDir, RunHeader};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    /// eMBB/URLLC regions: H-OMA, H-NOMA with SIC and puncturing, Markov lower bound.
    EmbbUrllcRegion,
    /// eMBB/mMTC regions: time sharing, H-NOMA with SIC, χ and Erlang bounds.
    EmbbMmtcRegion,
    /// Each service on its own: eMBB policy, URLLC rate per F_U, mMTC capacity.
    SingleService,
    /// Closed-form checks; prints PASS/FAIL per check.
    Validate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::EmbbUrllcRegion => "embb-urllc-region",
            Command::EmbbMmtcRegion => "embb-mmtc-region",
            Command::SingleService => "single-service",
            Command::Validate => "validate",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "slicing", version, about = "Rate regions for orthogonal and non-orthogonal uplink slicing")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Scenario config (`key=value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Monte Carlo trials (gain paths for the mMTC tables). Defaults to
    /// 10^6, or 10^8 when the URLLC target is below 1e-3.
    #[arg(long)]
    trials: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write SVG plots.
    #[arg(long)]
    plots: bool,
    /// Substitute eps_u = 1e-3 for quick runs.
    #[arg(long)]
    fast: bool,
}

enum Failure {
    Usage(String),
    Numeric(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } | Error::InsufficientTrials { .. } | Error::InvalidPlan(_) => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Numeric(other.to_string()),
        }
    }
}

fn default_trials(command: Command, cfg: Option<&ScenarioConfig>) -> u64 {
    match (command, cfg) {
        (Command::EmbbUrllcRegion | Command::SingleService, Some(c)) if c.eps_u < 1e-3 => 100_000_000,
        _ => 1_000_000,
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let started = Instant::now();
    let cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
            Some(parse_config(&text, cli.fast)?)
        }
        None => None,
    };
    let trials = cli.trials.unwrap_or_else(|| default_trials(cli.command, cfg.as_ref()));
    let plan = McPlan::new(trials, cli.seed)?;

    if cli.command == Command::Validate {
        let checks = validate::run(&plan)?;
        for c in &checks {
            println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        let failed = checks.iter().filter(|c| !c.pass).count();
        return if failed == 0 {
            Ok(())
        } else {
            Err(Failure::Numeric(format!("{failed} validation check(s) failed")))
        };
    }

    let cfg = cfg.ok_or_else(|| Failure::Usage(format!("{} needs --config", cli.command.name())))?;
    let out_root = cli.out.clone().ok_or_else(|| Failure::Usage(format!("{} needs --out", cli.command.name())))?;
    let (result, files) = match cli.command {
        Command::EmbbUrllcRegion => (commands::embb_urllc(&cfg, &plan), commands::EMBB_URLLC_FILES),
        Command::EmbbMmtcRegion => (commands::embb_mmtc(&cfg, &plan), commands::EMBB_MMTC_FILES),
        Command::SingleService => (commands::single_service(&cfg, &plan), commands::SINGLE_SERVICE_FILES),
        Command::Validate => unreachable!("handled above"),
    };
    let artifacts: Artifacts = match result {
        Ok(a) => a,
        Err(Error::Infeasible(reason)) => {
            warn!("scenario infeasible: {reason}");
            commands::infeasible(files, &reason)
        }
        Err(e) => return Err(e.into()),
    };

    let header = RunHeader { command: cli.command.name().to_string(), config: Some(cfg), seed: cli.seed, trials, fast: cli.fast };
    let io = |e: std::io::Error| Failure::Usage(format!("cannot write to {}: {e}", out_root.display()));
    let mut out = OutDir::create(&out_root).map_err(io)?;
    for (name, table) in &artifacts.tables {
        out.write_table(name, table, &header).map_err(io)?;
    }
    if cli.plots {
        for (name, plot) in &artifacts.plots {
            out.write(name, &plot.render()).map_err(io)?;
        }
    }
    out.write_manifest(&header, cli.config.as_deref(), started.elapsed().as_secs_f64()).map_err(io)?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Numeric(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
