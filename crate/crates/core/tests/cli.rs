use std::process::{Command, Output};

fn lab(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cotangent-lab"));
    cmd.args(args).env_remove("COTANGENT_LAB_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn listing_the_catalog_succeeds() {
    let o = lab(&["examples", "list", "--format", "csv"], &[]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("id,description\n"));
}

#[test]
fn exported_entries_reload_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("so3.json");
    let o = lab(&["examples", "export", "linear_so3", "--out", path.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0));
    let o = lab(&["classify", path.to_str().unwrap(), "--count", "5", "--format", "json"], &[]);
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["schema"], "cotangent-lab/report/v1");
    assert_eq!(report["result"]["summary"]["poisson"], true);
}

#[test]
fn wrong_labels_fail_the_check() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r3.json");
    let mut file = cotangent_lab::catalog::file("r3_nonfoliated").unwrap();
    file.labels.as_mut().unwrap().poisson = true;
    std::fs::write(&path, file.to_json()).unwrap();
    let o = lab(&["classify", path.to_str().unwrap(), "--format", "text"], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn missing_and_malformed_files_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(lab(&["classify", dir.path().join("nope.json").to_str().unwrap()], &[]).status.code(), Some(2));
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"schema": "cotangent-lab/scenario/v1", "name": "b", "chart": {"dim": 2, "coords": ["q", "p"]}, "pi": [["q +"]], "hamiltonian": "q"}"#).unwrap();
    let o = lab(&["classify", bad.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("pi[0][0]"));
    let unwritable = dir.path().join("missing-dir").join("out.json");
    assert_eq!(lab(&["examples", "list", "--out", unwritable.to_str().unwrap()], &[]).status.code(), Some(2));
}

#[test]
fn singular_evaluation_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sing.json");
    std::fs::write(&path, r#"{"schema": "cotangent-lab/scenario/v1", "name": "s", "chart": {"dim": 2, "coords": ["q", "p"]}, "pi": [["1/q"]], "hamiltonian": "q"}"#).unwrap();
    let o = lab(&["stationary", path.to_str().unwrap(), "--m", "0,0"], &[]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn invalid_thread_count_is_rejected() {
    assert_eq!(lab(&["examples", "list"], &[("COTANGENT_LAB_THREADS", "0")]).status.code(), Some(2));
}

#[test]
fn reports_do_not_depend_on_the_thread_count() {
    let args = ["verify", "--item", "3", "linear_so3", "--draws", "4", "--grid", "256", "--tol", "1e-4", "--seed", "9"];
    let one = lab(&args, &[("COTANGENT_LAB_THREADS", "1")]);
    let many = lab(&args, &[("COTANGENT_LAB_THREADS", "4")]);
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, many.stdout);
}

#[test]
fn stationary_paths_export_as_csv() {
    let o = lab(&["stationary", "symplectic2d", "--m", "1,0", "--grid", "16", "--tol", "1e-2", "--format", "csv"], &[]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("t,x0,x1,a0,a1\n"));
    assert_eq!(text.lines().count(), 18);
}

#[test]
fn counterexample_runs_from_the_command_line() {
    let o = lab(&["verify", "--item", "2ce", "--grid", "256", "--draws", "5", "--format", "text"], &[]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("not cotangent: PASS"));
}

#[test]
fn functional_check_runs_on_a_catalog_entry() {
    let o = lab(&["functional", "pia_pib_pair", "--draws", "3", "--grid", "128"], &[]);
    assert_eq!(o.status.code(), Some(0));
}
