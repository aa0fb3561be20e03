use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_plasmaball"));
    c.env_remove("PLASMABALL_OUT").env_remove("PLASMABALL_THREADS");
    c
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn invalid_grid_is_a_config_error_before_any_work() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let o = run(&["verify", "--grid", "16"], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("grid"));
    assert!(!out.exists());
    let o = run(&["branch", "-N", "3", "-p", "3"], &out);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn zero_lambda_range_gives_one_row_with_unit_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["branch", "--grid", "128", "--lambda-max", "0"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("branch_N2_p2.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "lambda,alpha,energy,sigma1,sigma1_sector,m_lambda,r_plus,dalpha_dlambda,residual");
    assert_eq!(lines.len(), 2);
    let alpha: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((alpha - 1.0).abs() < 1e-12);
    let summary = json(&dir.path().join("branch_N2_p2.json"));
    assert!(summary["lambda_plus"].is_null());
    assert_eq!(summary["schema"], 1);
}

#[test]
fn sweep_across_lambda_plus_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["branch", "-N", "3", "-p", "1.5", "--grid", "128"];
    assert!(run(&args, a.path()).status.success());
    let o = bin().args(args).env("PLASMABALL_OUT", b.path()).env("PLASMABALL_THREADS", "1").output().unwrap();
    assert!(o.status.success());
    let name = "branch_N3_p1.5.csv";
    let csv_a = std::fs::read(a.path().join(name)).unwrap();
    assert_eq!(csv_a, std::fs::read(b.path().join(name)).unwrap());
    let summary = json(&a.path().join("branch_N3_p1.5.json"));
    let lp = summary["lambda_plus"].as_f64().unwrap();
    let lf = summary["lambda_plus_formula"].as_f64().unwrap();
    assert!((lp - lf).abs() < 1e-3 * lf);
    assert_eq!(summary["alpha_decreasing"], true);
    assert_eq!(summary["sigma1_positive"], true);
    let text = String::from_utf8(csv_a).unwrap();
    for row in text.lines().skip(1) {
        let sigma: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
        assert!(sigma > 0.0);
    }
}

#[test]
fn config_file_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    std::fs::write(&conf, "# planar\ndimension = 2\nexponent = 3\ngrid = 64\n").unwrap();
    let o = bin()
        .args(["lambda-plus", "--config"])
        .arg(&conf)
        .args(["--grid", "128"])
        .output()
        .unwrap();
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["exponent"], 3.0);
    assert_eq!(v["grid"], 128);
    std::fs::write(&conf, "grid = 64\nbogus = 1\n").unwrap();
    let o = bin().args(["emden", "--config"]).arg(&conf).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn zero_tolerance_fails_only_the_affected_check() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify", "--grid", "128", "--tol", "0"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let report = json(&dir.path().join("verify_N2_p2.json"));
    let checks = report["checks"].as_array().unwrap();
    let mut ids: Vec<&str> = checks.iter().map(|c| c["id"].as_str().unwrap()).collect();
    let n = ids.len();
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), n, "every check appears once");
    for c in checks {
        let id = c["id"].as_str().unwrap();
        if id.starts_with("multiplier-identity") {
            assert_eq!(c["passed"], false);
        }
        assert!(!c["measured"].is_null(), "{id} did not run");
    }
    assert_eq!(report["all_passed"], false);
}
