//! The `doiflow` binary: exit codes, reports and determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use doiflow_lab::report::csv_rows;
use doiflow_lab::runner::FLOW_HEADER;

struct Scratch {
    dir: tempfile::TempDir,
}

impl Scratch {
    fn new() -> Self {
        Scratch { dir: tempfile::tempdir().unwrap() }
    }

    fn file(&self, name: &str, text: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn doiflow(command: &str, config: &Path, extra: &[&str], seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_doiflow"));
    cmd.arg(command).arg("--config").arg(config).args(extra);
    match seed {
        Some(s) => cmd.env("DOIFLOW_SEED", s),
        None => cmd.env_remove("DOIFLOW_SEED"),
    };
    cmd.output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn flow_writes_csv_with_the_fixed_header() {
    let s = Scratch::new();
    let cfg = s.file("flow.json", r#"{"command": "flow", "model": {"name": "two_level"}, "s_grid": {"steps": 50}}"#);
    let out = s.path("flow.csv");
    let o = doiflow("flow", &cfg, &["--output", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# doiflow flow generated_unix="));
    assert!(lines[1].starts_with("# config: "));
    let rows = csv_rows(&text);
    let mut rows = rows.lines();
    assert_eq!(rows.next(), Some(FLOW_HEADER));
    assert_eq!(rows.count(), 51);
}

#[test]
fn output_is_independent_of_worker_count() {
    let s = Scratch::new();
    let cfg = s.file(
        "rg.json",
        r#"{"command": "flow", "model": {"name": "random_gapped", "params": {"dim": 6}}, "s_grid": {"steps": 40}, "seed": 11}"#,
    );
    let mut bodies = Vec::new();
    for (k, workers) in ["1", "3", "1"].iter().enumerate() {
        let out = s.path(&format!("rg{k}.csv"));
        let o = doiflow("flow", &cfg, &["--workers", workers, "--output", out.to_str().unwrap()], None);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let text = std::fs::read_to_string(&out).unwrap();
        // everything after the timestamp line
        bodies.push(text.split_once('\n').unwrap().1.to_string());
    }
    assert_eq!(bodies[0], bodies[1]);
    assert_eq!(bodies[0], bodies[2]);
}

#[test]
fn seed_env_overrides_config() {
    let s = Scratch::new();
    let run = |seed_in_config: u64, env: Option<&str>| {
        let cfg = s.file(
            "seeded.json",
            &format!(
                r#"{{"command": "flow", "model": {{"name": "random_gapped", "params": {{"dim": 4}}}}, "s_grid": {{"steps": 10}}, "seed": {seed_in_config}}}"#
            ),
        );
        let o = doiflow("flow", &cfg, &[], env);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        String::from_utf8(o.stdout).unwrap().split_once('\n').unwrap().1.to_string()
    };
    let from_env = run(1, Some("5"));
    assert_eq!(from_env, run(5, None));
    assert!(from_env.contains("\"seed\":5"));
    assert_ne!(csv_rows(&from_env), csv_rows(&run(6, None)));
}

#[test]
fn config_errors_exit_2_naming_the_field() {
    let s = Scratch::new();
    let cases = [
        (r#"{"command": "flow", "model": {"name": "two_level"}, "s_grid": {"steps": 0}}"#, "s_grid.steps"),
        (r#"{"command": "flow", "model": {"name": "ising"}}"#, "model.name"),
        ("{\n \"command\": \"flow\",\n \"stepz\": 3\n}", "line 3"),
        ("{\"command\": \"flow\", ", "line 1"),
    ];
    for (text, needle) in cases {
        let cfg = s.file("bad.json", text);
        let o = doiflow("flow", &cfg, &[], None);
        assert_eq!(o.status.code(), Some(2), "{text}");
        assert!(stderr(&o).contains(needle), "{}", stderr(&o));
    }
    let o = doiflow("flow", &s.path("missing.json"), &[], None);
    assert_eq!(o.status.code(), Some(2));
    let cfg = s.file("seed.json", r#"{"command": "weightfn", "gamma": 1.0}"#);
    let o = doiflow("weightfn", &cfg, &[], Some("-3"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("seed"));
}

#[test]
fn numerical_failure_exits_3_with_code_in_report() {
    let s = Scratch::new();
    let cfg = s.file(
        "gap.json",
        r#"{"command": "flow", "model": {"name": "two_level"}, "gamma": 2.5, "s_grid": {"steps": 5}}"#,
    );
    let o = doiflow("flow", &cfg, &[], None);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stdout).contains("# error gap"));
}

#[test]
fn failed_check_exits_1() {
    let s = Scratch::new();
    // four contour nodes leave P′ far from i[D, P]
    let cfg = s.file(
        "coarse.json",
        r#"{"command": "flow", "model": {"name": "two_level"}, "s_grid": {"steps": 5}, "quadrature": {"contour_nodes": 4}}"#,
    );
    let o = doiflow("flow", &cfg, &[], None);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("commutator_residual"));
}

#[test]
fn weightfn_table() {
    let s = Scratch::new();
    let cfg = s.file("w.json", r#"{"command": "weightfn", "gamma": 2.0}"#);
    let o = doiflow("weightfn", &cfg, &[], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let norm: f64 = text.lines().find_map(|l| l.strip_prefix("normalization,0e0,")).unwrap().parse().unwrap();
    assert!((norm - 1.0).abs() <= 1e-8);
    assert_eq!(text.lines().filter(|l| l.starts_with("t,")).count(), 401);
    assert_eq!(text.lines().filter(|l| l.starts_with("xi,")).count(), 201);
}

#[test]
fn doi_and_dk_reports() {
    let s = Scratch::new();
    for (cmd, header) in [("doi", doiflow_lab::runner::DOI_HEADER), ("dk", doiflow_lab::runner::DK_HEADER)] {
        let cfg = s.file(
            "p.json",
            &format!(r#"{{"command": "{cmd}", "model": {{"name": "random_gapped", "params": {{"dim": 4}}}}, "s_grid": {{"steps": 3}}}}"#),
        );
        let o = doiflow(cmd, &cfg, &[], None);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let text = String::from_utf8(o.stdout).unwrap();
        assert!(csv_rows(&text).starts_with(header));
    }
}

#[test]
fn verify_writes_summary_and_exits_0() {
    let s = Scratch::new();
    let cfg = s.file("v.json", r#"{"command": "verify", "output": "ignored.json"}"#);
    let out = s.path("summary.json");
    let o = doiflow("verify", &cfg, &["--output", out.to_str().unwrap()], None);
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(o.status.code(), Some(0), "{text}");
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let criteria = v["criteria"].as_array().unwrap();
    assert_eq!(criteria.len(), 15);
    for c in criteria {
        for key in ["criterion_id", "status", "measured", "tolerance"] {
            assert!(c.get(key).is_some(), "{key} missing in {c}");
        }
        assert_eq!(c["status"], "pass");
    }
    assert!(!s.path("ignored.json").exists());
}
