use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qthermo"))
}

const SMALL_TRANSIENT: &str = r#"
scenario.name = "tiny"
scenario.kind = "transient"
system.qubits = 1
system.omega1 = 1.0
bath.common = { beta = 1.0, mu_x = 0.03 }
target.parameter = "beta_common"
grid = { t_end = 200.0, n_samples = 11 }
"#;

#[test]
fn simulate_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.toml");
    fs::write(&cfg, SMALL_TRANSIENT).unwrap();
    let out = dir.path().join("out");
    let status = bin().arg("simulate").arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert!(status.success());
    let csv = fs::read_to_string(out.join("tiny.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,qfi_beta,qfi_T,trace_err,min_eig");
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 11);
    assert!(rows[5].split(',').all(|f| f.contains('e')));
}

const SMALL_SWEEP: &str = r#"
scenario.name = "sweep"
scenario.kind = "steady"
system.qubits = 2
system.omega1 = 1.0
system.omega2 = 0.5
system.k = 0.01
bath.common = { beta = 1.0, mu_x = 0.01 }
target.parameter = "beta_common"
target.probe = 1
sweep = { beta_min = 0.5, beta_max = 2.0, n = 3 }
"#;

#[test]
fn variant_flags_change_the_result() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    fs::write(&cfg, SMALL_SWEEP).unwrap();
    let read = |extra: &[&str], sub: &str| {
        let out = dir.path().join(sub);
        let status = bin().arg("steady").arg(&cfg).arg("--out").arg(&out).args(extra).status().unwrap();
        assert!(status.success());
        fs::read_to_string(out.join("sweep.csv")).unwrap()
    };
    let partial = read(&["--variant", "partial"], "partial");
    let bare = read(&["--variant", "partial", "--no-lamb-shift"], "bare");
    assert_eq!(partial.lines().count(), 4);
    assert_ne!(partial, bare);
}

#[test]
fn wrong_kind_and_bad_input_fail() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.toml");
    fs::write(&cfg, SMALL_TRANSIENT).unwrap();
    let out = bin().arg("steady").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("transient"));

    fs::write(&cfg, format!("{SMALL_TRANSIENT}\nbogus = 1\n")).unwrap();
    let out = bin().arg("simulate").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    let out = bin().args(["simulate", "/nonexistent.toml"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn validate_filter_runs_one_check() {
    let out = bin().args(["validate", "--filter", "detailed_balance"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("PASS [12] detailed_balance"));

    let out = bin().args(["validate", "--filter", "no_such_check"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
