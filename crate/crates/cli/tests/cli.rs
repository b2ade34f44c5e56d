use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use slicing_core::parse_config;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_slicing"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn region(command: &str, config: &str, trials: &str, out: &Path) -> Output {
    let cfg = configs().join(config);
    run(&[
        command,
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "9",
        "--trials",
        trials,
        "--out",
        out.to_str().unwrap(),
        "--plots",
        "--fast",
    ])
}

fn read_all(dir: &Path, names: &[&str]) -> Vec<Vec<u8>> {
    names.iter().map(|n| fs::read(dir.join(n)).unwrap()).collect()
}

#[test]
fn embb_urllc_region_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let o = region("embb-urllc-region", "fig4.conf", "100000", dir);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let files = ["oma.csv", "noma_sic.csv", "noma_puncture.csv", "appendix_a_lb.csv", "embb_urllc.svg"];
    assert_eq!(read_all(&a, &files), read_all(&b, &files));

    let sic = fs::read_to_string(a.join("noma_sic.csv")).unwrap();
    assert!(sic.contains("# seed: 9\n") && sic.contains("# trials: 100000\n") && sic.contains("# fast: true\n"));
    let manifest = fs::read_to_string(a.join("manifest.txt")).unwrap();
    assert!(manifest.contains("wall_time_s") && manifest.contains("noma_sic.csv"));
    assert!(!sic.contains("wall_time"));
}

#[test]
fn header_reconstructs_the_config() {
    let tmp = tempfile::tempdir().unwrap();
    let o = region("embb-urllc-region", "fig4.conf", "100000", tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(tmp.path().join("oma.csv")).unwrap();
    let echo: String = csv.lines().filter_map(|l| l.strip_prefix("# config: ")).map(|l| format!("{l}\n")).collect();
    let original = parse_config(&fs::read_to_string(configs().join("fig4.conf")).unwrap(), true).unwrap();
    assert_eq!(parse_config(&echo, true).unwrap(), original);

    let body: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert!(body[0].starts_with("r_b_sum,r_u,"));
    // F_U = 0..=10 gives eleven rows.
    assert_eq!(body.len(), 12);
    for cell in body[1].split(',').filter(|c| !c.is_empty()) {
        let mantissa = cell.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
        assert_eq!(mantissa.len(), 17, "{cell}");
    }
}

#[test]
fn embb_mmtc_region_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let o = region("embb-mmtc-region", "fig7.conf", "2048", dir);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let files = ["oma.csv", "noma.csv", "appendix_b_ub.csv", "appendix_b_lb.csv", "appendix_b_ub_orth.csv", "embb_mmtc.svg"];
    assert_eq!(read_all(&a, &files), read_all(&b, &files));
    let noma = fs::read_to_string(a.join("noma.csv")).unwrap();
    assert!(noma.lines().any(|l| l.starts_with("r_b,lambda_m,")));
}

#[test]
fn validate_passes() {
    let o = run(&["validate", "--trials", "200000", "--seed", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().count() >= 8);
    assert!(text.lines().all(|l| l.starts_with("PASS ")), "{text}");
}

#[test]
fn config_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let bad = |name: &str, text: &str| {
        let p = tmp.path().join(name);
        fs::write(&p, text).unwrap();
        run(&["single-service", "--config", p.to_str().unwrap(), "--out", out.to_str().unwrap()])
    };

    let base = fs::read_to_string(configs().join("fig4.conf")).unwrap();
    let o = bad("unknown.conf", &format!("{base}\nbandwidth=5\n"));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("gamma_b_db"), "{}", stderr(&o));

    let o = bad("order.conf", &base.replace("eps_u=1e-5", "eps_u=1e-2"));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("eps_u must be < eps_b"), "{}", stderr(&o));

    let o = bad("missing.conf", &base.replace("gamma_b_db=10 eps_b=1e-3", "eps_b=1e-3"));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("gamma_b"), "{}", stderr(&o));

    let o = run(&["single-service", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["no-such-command"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn too_few_trials_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("fig4.conf");
    let o = run(&["single-service", "--config", cfg.to_str().unwrap(), "--trials", "1000", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("not enough Monte Carlo trials"), "{}", stderr(&o));
}

#[test]
fn infeasible_scenario_warns_and_succeeds() {
    let tmp = tempfile::tempdir().unwrap();
    let base = fs::read_to_string(configs().join("fig7.conf")).unwrap();
    // The lone-device outage (about 0.0089) already exceeds this target.
    let p = tmp.path().join("strict.conf");
    fs::write(&p, base.replace("eps_m=0.1", "eps_m=0.005")).unwrap();
    let out = tmp.path().join("out");
    let o = run(&[
        "single-service",
        "--config",
        p.to_str().unwrap(),
        "--trials",
        "100000",
        "--fast",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("WARN"), "{}", stderr(&o));
    let mmtc = fs::read_to_string(out.join("mmtc.csv")).unwrap();
    assert!(mmtc.contains("# note: infeasible"));
    assert_eq!(mmtc.lines().filter(|l| !l.starts_with('#')).count(), 1);
}
