use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn fracrds(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracrds")).args(args).current_dir(cwd).env_remove("FRACRDS_THREADS").output().expect("binary runs")
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn fbm_run_writes_one_csv_and_a_hashed_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("fbm.cfg"), "h = 0.5\nt_total = 1\ndt = 0.00390625\nseeds = 11\n").unwrap();
    let o = fracrds(&["fbm", "--config", "fbm.cfg", "--out", "run"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = tmp.path().join("run");
    let mut names: Vec<String> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["fbm_seed11.csv", "manifest.json"]);

    let csv = std::fs::read_to_string(dir.join("fbm_seed11.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("t,x1"));
    assert_eq!(csv.lines().count(), 1 + 257);

    let m = manifest(&dir);
    assert_eq!(m["kind"], "fbm");
    assert_eq!(m["config"]["seeds"], "11");
    assert_eq!(m["passed"], true);
    let f = &m["files"][0];
    assert_eq!(f["path"], "fbm_seed11.csv");
    assert_eq!(f["bytes"], csv.len() as u64);
    assert_eq!(f["sha256"], fracrds_cli::manifest::sha256_hex(csv.as_bytes()));
}

#[test]
fn malformed_config_exits_2_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("bad.cfg"), "t_total = 0.01\ndt = 0.1\n").unwrap();
    let o = fracrds(&["flow", "--config", "bad.cfg", "--out", "run"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("'dt'"));
    assert!(!tmp.path().join("run").exists());

    std::fs::write(tmp.path().join("typo.cfg"), "t_totl = 1\n").unwrap();
    let o = fracrds(&["fbm", "--config", "typo.cfg", "--out", "run"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("'t_totl'"));
    assert!(!tmp.path().join("run").exists());
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("flow.cfg"), "h = 0.3\nt_total = 2\ndt = 0.001\nseed_count = 3\nmaster_seed = 5\nx0 = 0.4\n").unwrap();
    for (threads, out) in [("1", "a"), ("2", "b")] {
        let o = fracrds(&["flow", "--config", "flow.cfg", "--threads", threads, "--out", out], tmp.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for s in 5..8 {
        let name = format!("flow_seed{s}.csv");
        let a = std::fs::read(tmp.path().join("a").join(&name)).unwrap();
        let b = std::fs::read(tmp.path().join("b").join(&name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn sweep_writes_table_with_bound_column() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = "h = 0.7\nsigmas = 0.5, 5\nt_total = 120\nburn_in = 10\ndt = 0.002\nseed_count = 1\nthin = 5\n";
    std::fs::write(tmp.path().join("sweep.cfg"), cfg).unwrap();
    let o = fracrds(&["sweep", "--config", "sweep.cfg", "--out", "run"], tmp.path());
    assert!(o.status.success(), "{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(tmp.path().join("run/sweep.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("sigma_norm,lambda1,stderr,mass_in_ball,bound"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], 0.5);
    assert_eq!(rows[1][0], 5.0);
    assert!(rows.iter().all(|r| r[3] >= 0.0 && r[3] <= 1.0));
}

#[test]
fn unknown_suite_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = fracrds(&["verify", "no-such-suite"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_writes_json_report() {
    let tmp = tempfile::tempdir().unwrap();
    let o = fracrds(&["verify", "trivial", "--out", "v"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("v/verify_trivial.json")).unwrap()).unwrap();
    assert_eq!(r["passed"], true);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("PASS trivial"));
}
