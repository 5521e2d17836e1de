// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn corpus(name: &str) -> String {
    root().join("corpus").join(name).to_string_lossy().into_owned()
}

fn htgen(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_htgen")).current_dir(dir).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn missing_template_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = htgen(dir.path(), &["baseline", "--netlist", &corpus("synth1.v"), "--out-dir", "b"]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("--template") && e.contains("Usage"), "{e}");
}

#[test]
fn bad_weights_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = htgen(
        dir.path(),
        &["insert", "--netlist", "x.v", "--template", "c2", "--models", "m.json", "--weights", "1,2", "--out-dir", "o"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("need 5 weights"));
}

#[test]
fn features_json_has_one_row_per_net() {
    let dir = tempfile::tempdir().unwrap();
    let o = htgen(dir.path(), &["features", "--netlist", &corpus("c17.v"), "--format", "json", "--vectors", "4096"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let text = v.to_string();
    for net in ["N1", "N10", "N22", "N23"] {
        assert!(text.contains(&format!("\"{net}\"")), "missing {net}");
    }
}

#[test]
fn validate_emitted_trojan() {
    let dir = tempfile::tempdir().unwrap();
    let host = corpus("synth1.v");
    let o = htgen(
        dir.path(),
        &["baseline", "--netlist", &host, "--template", "c2", "--count", "2", "--vectors", "20000", "--out-dir", "b"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let o = htgen(dir.path(), &["validate", "--netlist", "b/baseline_000.v", "--original", &host]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("\"witness\"") && out.contains("\"verify\""), "{out}");
}

#[test]
fn validate_reports_unsatisfiable_condition() {
    let dir = tempfile::tempdir().unwrap();
    let o = htgen(dir.path(), &["validate", "--netlist", &corpus("c17.v"), "--condition", "N1=0,N10=0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unsatisfiable"));
    let o = htgen(dir.path(), &["validate", "--netlist", &corpus("c17.v"), "--condition", "N22=1,N23=0"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn log_file_starts_with_seed_header() {
    let dir = tempfile::tempdir().unwrap();
    let o = htgen(
        dir.path(),
        &["--log", "f.log", "features", "--netlist", &corpus("c17.v"), "--vectors", "64", "--seed", "9", "--out", "f.csv"],
    );
    assert!(o.status.success());
    let log = std::fs::read_to_string(dir.path().join("f.log")).unwrap();
    let mut lines = log.lines();
    assert!(lines.next().unwrap().starts_with("# htgen features "));
    assert_eq!(lines.next(), Some("# seed 9"));
}

#[test]
fn pipeline_script_writes_accuracy_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = Command::new("bash")
        .arg(root().join("scripts/pipeline.sh"))
        .arg(&out)
        .env("HTGEN", env!("CARGO_BIN_EXE_htgen"))
        .env("VECTORS", "5000")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("accuracy.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("top_n,no_ml,troj_ml_a,trig_pay_ml_b,both"));
    assert_eq!(lines.count(), 3);
    assert_eq!(std::fs::read_dir(out.join("inserted")).unwrap().filter(|e| {
        e.as_ref().unwrap().path().extension().is_some_and(|x| x == "v")
    }).count(), 3);
}
