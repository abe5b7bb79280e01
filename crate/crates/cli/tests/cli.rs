use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn minimal() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/minimal.conf")
}

fn snse(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_snse"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("SNSE_CONFIG")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.conf");
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn simulate_writes_tagged_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let o = snse(&["--config", minimal().to_str().unwrap(), "simulate"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# config_hash="));
    assert_eq!(lines.next().unwrap(), "# seed=7");
    assert_eq!(
        lines.next().unwrap(),
        "t,norm_h_u,norm_v_u,norm_fracdelta_u,norm_h_v,norm_h_z,gamma,p_t,dineq_residual"
    );
    // T = 1 at h = 0.01 with stride 1.
    assert_eq!(lines.count(), 101);
    let meta = fs::read_to_string(dir.path().join("metadata.txt")).unwrap();
    assert!(meta.contains("backend=abstract"));
    assert!(meta.contains("alpha="));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = snse(&["--config", minimal().to_str().unwrap(), "--seed", "11", "simulate"], dir.path());
    assert!(o.status.success());
    let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(csv.contains("# seed=11"));
}

#[test]
fn missing_required_key_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path(), "[model]\nbackend = abstract\nn = 4\n[time]\nh = 0.01\nt = 1\n");
    let o = snse(&["--config", conf.to_str().unwrap(), "simulate"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("noise.beta"));
}

#[test]
fn unknown_key_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path(), "[model]\nbackend = abstract\nwobble = 3\n");
    let o = snse(&["--config", conf.to_str().unwrap(), "simulate"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn unknown_check_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = snse(
        &["--config", minimal().to_str().unwrap(), "verify", "--checks", "poincare,bogus"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));
}

#[test]
fn failing_check_exits_nonzero_with_report() {
    // No damping shift and large noise: the running average of gamma stays
    // positive, so the negativity check must fail.
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(minimal()).unwrap().replace("sigma = 0.5", "sigma = 20") + "\n[ou]\nalpha = 0\n";
    let conf = write_config(dir.path(), &text);
    let o = snse(
        &["--config", conf.to_str().unwrap(), "verify", "--checks", "gamma_negativity"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let report = fs::read_to_string(dir.path().join("verify_report.csv")).unwrap();
    assert!(report.contains("gamma_negativity,FAIL"));
}

#[test]
fn passing_checks_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = snse(
        &["--config", minimal().to_str().unwrap(), "verify", "--checks", "poincare,antisymmetry,check_bsum"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = fs::read_to_string(dir.path().join("verify_report.csv")).unwrap();
    assert!(report.contains("check,status,residuals,seeds,constants"));
    assert_eq!(report.matches(",PASS,").count(), 3);
}

#[test]
fn env_override_changes_hash() {
    let dir = tempfile::tempdir().unwrap();
    let conf = minimal();
    let run = |h: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_snse"));
        c.args(["--config", conf.to_str().unwrap(), "simulate", "--out"]).arg(dir.path());
        if let Some(h) = h {
            c.env("SNSE_TIME_H", h);
        }
        assert!(c.output().unwrap().status.success());
        fs::read_to_string(dir.path().join("trajectory.csv")).unwrap().lines().next().unwrap().to_string()
    };
    assert_ne!(run(None), run(Some("0.02")));
}

#[test]
fn plot_renders_svg_with_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let o = snse(&["--config", minimal().to_str().unwrap(), "simulate"], dir.path());
    assert!(o.status.success());
    let csv = dir.path().join("trajectory.csv");
    let o = snse(&["plot", csv.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let svg = fs::read_to_string(dir.path().join("trajectory.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("config_hash="));
}

#[test]
fn plot_rejects_empty_and_unknown_csv() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    let o = snse(&["plot", empty.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let odd = dir.path().join("odd.csv");
    fs::write(&odd, "a,b\n1,2\n").unwrap();
    let o = snse(&["plot", odd.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unrecognized"));
}
