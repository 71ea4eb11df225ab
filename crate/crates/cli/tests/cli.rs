use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dropdecomp"))
}

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn run(op: &str, scenario: &Path, out: &Path) -> Output {
    bin()
        .args([op, "--scenario"])
        .arg(scenario)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn decompose_writes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = run("decompose-i", &scenarios().join("decompose-i.json"), &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["certificate.json", "report.json", "errors.csv"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    assert!(String::from_utf8_lossy(&o.stdout).contains("decompose-i PASS"));
}

#[test]
fn certificate_is_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let s = scenarios().join("verify-ii.json");
    assert_eq!(run("verify-ii", &s, &a).status.code(), Some(0));
    assert_eq!(run("verify-ii", &s, &b).status.code(), Some(0));
    assert_eq!(
        fs::read(a.join("certificate.json")).unwrap(),
        fs::read(b.join("certificate.json")).unwrap()
    );
}

#[test]
fn missing_seed_is_a_schema_error() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(scenarios().join("verify-ii.json")).unwrap();
    let p = write(tmp.path(), "s.json", &text.replace("\"seed\": 5,", ""));
    let o = run("verify-ii", &p, &tmp.path().join("out"));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unknown_subcommand_exits_3() {
    let o = bin().args(["transmogrify", "--scenario", "x.json"]).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn missing_scenario_file_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run("decompose-i", &tmp.path().join("absent.json"), &tmp.path().join("out"));
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn failed_verification_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(scenarios().join("verify-ii.json")).unwrap();
    let p = write(tmp.path(), "s.json", &text.replace("\"none\"", "\"partition\""));
    let out = tmp.path().join("out");
    let o = run("verify-ii", &p, &out);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let report = fs::read_to_string(out.join("report.json")).unwrap();
    assert!(report.contains("\"pass\": false") || report.contains("\"pass\":false"));
}

#[test]
fn operation_mismatch_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run("cluster", &scenarios().join("decompose-i.json"), &tmp.path().join("out"));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn every_shipped_scenario_runs() {
    let tmp = tempfile::tempdir().unwrap();
    for op in ["decompose-i", "skeletonize", "distinct", "cluster", "verify-ii", "generate"] {
        let out = tmp.path().join(op);
        let o = run(op, &scenarios().join(format!("{op}.json")), &out);
        assert_eq!(o.status.code(), Some(0), "{op}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(out.join("certificate.json").exists());
    }
}
