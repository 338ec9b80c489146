use std::path::Path;
use std::process::Command;

use sparse01::cli::{run_cli, EXIT_CHECK_FAILED, EXIT_HYPOTHESIS, EXIT_OK, EXIT_PARSE};

fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("sparse01").chain(args.iter().copied());
    let code = run_cli(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const SMALL_BRACKET: &str = r#"
schema = 1

[experiment]
kind = "bracket"
seed = 1
trials = 3
n = 300
embed_cap = 20

[pair]
catalog = "pendant"
"#;

#[test]
fn catalog_listings() {
    for (kind, name) in [("contexts", "sparse-graph-irr"), ("pairs", "common-neighbor"), ("systems", "overlap-2")] {
        let (code, out, _) = cli(&["catalog", kind]);
        assert_eq!(code, EXIT_OK);
        assert!(out.lines().any(|l| l.starts_with(name)), "{out}");
    }
    let (code, out, _) = cli(&["catalog", "systems", "--show", "overlap-2"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("f 2 24"), "{out}");
    let (code, _, err) = cli(&["catalog", "bogus"]);
    assert_eq!(code, EXIT_PARSE);
    assert!(err.contains("bogus"));
}

#[test]
fn run_writes_artifacts_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "spec.toml", SMALL_BRACKET);
    let mut csvs = Vec::new();
    let mut jsonls = Vec::new();
    for out in ["a", "b"] {
        let out = dir.path().join(out);
        let (code, stdout, err) = cli(&["run", &spec, "--out", out.to_str().unwrap()]);
        assert_eq!(code, EXIT_OK, "{err}");
        assert!(stdout.contains("status: OK"));
        csvs.push(std::fs::read_to_string(out.join("summary.csv")).unwrap());
        jsonls.push(std::fs::read_to_string(out.join("trials.jsonl")).unwrap());
        assert!(out.join("report.txt").exists());
    }
    assert_eq!(csvs[0], csvs[1]);
    assert_eq!(jsonls[0], jsonls[1]);
    assert!(csvs[0].starts_with("schema,kind,check,verdict,value,threshold\n"));
    let lines: Vec<serde_json::Value> = jsonls[0].lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[0]["record"], "header");
    assert_eq!(lines[4]["record"], "summary");
    assert!(lines.iter().all(|l| l["schema"] == 1));

    let other = dir.path().join("c");
    let (code, _, _) = cli(&["run", &spec, "--seed", "2", "--out", other.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert_ne!(std::fs::read_to_string(other.join("trials.jsonl")).unwrap(), jsonls[0]);
}

#[test]
fn failed_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "strict.toml",
        &SMALL_BRACKET.replace("embed_cap = 20", "embed_cap = 20\nmax_nu = 0"),
    );
    let (code, out, _) = cli(&["run", &spec, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code, EXIT_CHECK_FAILED);
    assert!(out.contains("FAIL"));
}

#[test]
fn malformed_inputs_exit_two_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let ctx = write(dir.path(), "bad.ctx", "vocab E/2:sym\nalpha E 0.5\nnewrel P/1 beta oops coeff 0.5\n");
    let (code, _, err) = cli(&["screen", &ctx]);
    assert_eq!(code, EXIT_PARSE);
    assert!(err.contains("line 3"), "{err}");

    let spec = write(dir.path(), "bad.toml", "schema = 1\n[experiment]\nkind = \"bracket\"\ntrials = \"many\"\n");
    let (code, _, err) = cli(&["run", &spec]);
    assert_eq!(code, EXIT_PARSE);
    assert!(err.contains("line 4"), "{err}");

    let sys = write(dir.path(), "bad.sys", "m 2\nn 4\nf 1 x\n");
    let (code, _, err) = cli(&["validate", &sys, "--kind", "system"]);
    assert_eq!(code, EXIT_PARSE);
    assert!(err.contains("line 3, column 5"), "{err}");

    let (code, _, _) = cli(&["run"]);
    assert_eq!(code, EXIT_PARSE);
}

#[test]
fn unmet_hypothesis_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "crossing.toml",
        r#"
schema = 1

[experiment]
kind = "census_step"
trials = 10
l1 = 1

[system]
text = """
m 2
n 4
f 1 2
f 2 1
class 0.3 {1,2}
"""
"#,
    );
    let (code, _, err) = cli(&["run", &spec, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code, EXIT_HYPOTHESIS, "{err}");
    assert!(err.contains("hypothesis"), "{err}");
}

#[test]
fn validate_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    for (kind, name) in [("contexts", "colored-pendant"), ("pairs", "colored-pendant"), ("systems", "overlap-2")] {
        let (_, text, _) = cli(&["catalog", kind, "--show", name]);
        let file = write(dir.path(), name, &text);
        let flag = &kind[..kind.len() - 1];
        let (code, once, err) = cli(&["validate", &file, "--kind", flag]);
        assert_eq!(code, EXIT_OK, "{kind}: {err}");
        let again = write(dir.path(), "again", &once);
        let (code, twice, _) = cli(&["validate", &again, "--kind", flag]);
        assert_eq!(code, EXIT_OK);
        assert_eq!(once, twice, "{kind}");
    }
}

#[test]
fn binary_screens_the_rational_context() {
    let out = Command::new(env!("CARGO_BIN_EXE_sparse01"))
        .args(["screen", "--catalog", "rational-binary", "--size-bound", "3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("violation ("), "{text}");

    let out = Command::new(env!("CARGO_BIN_EXE_sparse01"))
        .args(["screen", "--catalog", "sparse-graph-irr", "--size-bound", "5"])
        .output()
        .unwrap();
    assert!(String::from_utf8(out.stdout).unwrap().contains(" 0 violations"));
}
