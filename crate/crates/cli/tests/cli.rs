use std::fs;
use std::process::{Command, Output};

fn cfgspace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cfgspace")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn list_scenarios_names_every_builtin_and_emits_toml() {
    let dir = tempfile::tempdir().unwrap();
    let out = cfgspace(&["list-scenarios", "--emit", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let listed = String::from_utf8(out.stdout).unwrap();
    for name in ["free", "free-fall", "harmonic", "photon", "emergence", "mixture", "dispersion-comparison"] {
        assert!(listed.lines().any(|l| l == name), "{name} missing");
        assert!(dir.path().join(format!("{name}.toml")).is_file());
    }
}

#[test]
fn check_accepts_builtin_and_reports_bad_grid_with_code_2() {
    assert!(cfgspace(&["check", "free", "--quiet"]).status.success());
    let out = cfgspace(&["check", "free", "--override", "grid.n_x=7"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("grid.n_x"));
}

#[test]
fn unknown_scenario_and_kind_exit_with_code_2() {
    let out = cfgspace(&["run", "no-such-scenario"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("unknown built-in scenario"));
    let out = cfgspace(&["check", "free", "--override", "kind=tachyon"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("unknown scenario kind"));
}

#[test]
fn wrap_violation_exits_with_code_2() {
    let out = cfgspace(&["check", "free", "--override", "initial.0.x0=9"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("wrap budget"));
}

#[test]
fn missing_config_file_exits_with_code_1() {
    let out = cfgspace(&["run", "/nonexistent/dir/scenario.toml"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn run_writes_series_snapshots_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = cfgspace(&[
        "run",
        "free",
        "--quiet",
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--override",
        "evolve.n_steps=100",
        "--override",
        "outputs.snapshot_every=50",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
    let csv = fs::read_to_string(out_dir.join("free.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,mean_x,mean_v,mean_p,mean_a,std_x,std_v,std_p,std_a,energy_class,norm"));
    assert_eq!(lines.count(), 101);
    for k in 0..3 {
        let snap = fs::read(out_dir.join(format!("free_snap_{k:04}.bin"))).unwrap();
        assert_eq!(&snap[..8], b"CFGQM1\0\0");
    }
    let report = fs::read_to_string(out_dir.join("free_report.json")).unwrap();
    assert!(report.contains("\"characteristics_distance\""));
}

#[test]
fn run_into_unwritable_directory_exits_with_code_1() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = cfgspace(&[
        "run",
        "dispersion-comparison",
        "--quiet",
        "--out-dir",
        blocker.join("sub").to_str().unwrap(),
        "--override",
        "evolve.n_steps=10",
    ]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
}
