use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fair-assign"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("utf8 stdout")
}

fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("utf8 stderr")
}

#[test]
fn all_fixture_instances_parse() {
    for name in
        ["two_agent", "crossed_pairs", "five_agent", "rsd_oe", "certain_priority", "hundred_items"]
    {
        let path = fixtures().join(format!("{name}.json"));
        let text = std::fs::read_to_string(&path).expect("fixture readable");
        fair_assign::io::parse_instance::<fair_assign::Rational>(&text)
            .unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn missing_instance_file_reports_path_and_exits_2() {
    let output = run(&["solve", "--alg", "ce", "--instance", "/nonexistent/xyz.json"]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr(&output).contains("/nonexistent/xyz.json"));
}

#[test]
fn malformed_json_exits_2_without_panic() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{ not json").unwrap();
    let output = run(&["solve", "--alg", "ute", "--instance", path.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr(&output).contains("JSON"));
}

#[test]
fn unknown_flag_exits_2() {
    let output = run(&["solve", "--bogus"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn audit_lef_without_lottery_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let assignment = dir.path().join("ce.json");
    let crossed_pairs = fixtures().join("crossed_pairs.json");
    let solve = run(&[
        "solve",
        "--alg",
        "ce",
        "--instance",
        crossed_pairs.to_str().unwrap(),
        "--out",
        assignment.to_str().unwrap(),
    ]);
    assert_eq!(solve.status.code(), Some(0));
    let output = run(&[
        "audit",
        "--props",
        "lef",
        "--instance",
        crossed_pairs.to_str().unwrap(),
        "--assignment",
        assignment.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr(&output).contains("--lottery"));
}

#[test]
fn audit_rejects_lottery_that_does_not_induce_the_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let crossed_pairs = fixtures().join("crossed_pairs.json");
    let ce = dir.path().join("ce.json");
    let rsd = dir.path().join("rsd.json");
    run(&[
        "solve",
        "--alg",
        "ce",
        "--instance",
        crossed_pairs.to_str().unwrap(),
        "--out",
        ce.to_str().unwrap(),
    ]);
    run(&[
        "solve",
        "--alg",
        "rsd",
        "--instance",
        crossed_pairs.to_str().unwrap(),
        "--out",
        rsd.to_str().unwrap(),
    ]);
    let output = run(&[
        "audit",
        "--props",
        "lef",
        "--instance",
        crossed_pairs.to_str().unwrap(),
        "--assignment",
        ce.to_str().unwrap(),
        "--lottery",
        rsd.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr(&output).contains("does not induce"));
}

#[test]
fn half_half_assignment_under_certain_priority_fails_1lef() {
    let dir = tempfile::tempdir().unwrap();
    let assignment = dir.path().join("half.json");
    std::fs::write(
        &assignment,
        r#"{ "matrix": {
            "1": { "a": "1/2", "b": "1/2" },
            "2": { "a": "1/2", "b": "1/2" }
        } }"#,
    )
    .unwrap();
    let instance = fixtures().join("certain_priority.json");
    let output = run(&[
        "audit",
        "--props",
        "sef,1lef",
        "--instance",
        instance.to_str().unwrap(),
        "--assignment",
        assignment.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(1));
    let text = stdout(&output);
    assert!(text.contains(r#""property": "sef""#));
    assert!(text.contains(r#""verdict": "pass""#));
    assert!(text.contains(r#""property": "1lef""#));
    assert!(text.contains(r#""verdict": "fail""#));
}

#[test]
fn lef_holding_lottery_on_hundred_items_passes_lef_but_fails_sef() {
    let dir = tempfile::tempdir().unwrap();
    let assignment = dir.path().join("p.json");
    let lottery = dir.path().join("l.json");
    std::fs::write(
        &assignment,
        r#"{ "matrix": {
            "1": { "i1": "1/2", "i100": "1/2" },
            "2": { "i99": "1/2", "i100": "1/2" }
        } }"#,
    )
    .unwrap();
    std::fs::write(
        &lottery,
        r#"[
            { "assignment": { "1": "i1", "2": "i100" }, "weight": "1/2" },
            { "assignment": { "1": "i100", "2": "i99" }, "weight": "1/2" }
        ]"#,
    )
    .unwrap();
    let instance = fixtures().join("hundred_items.json");
    let output = run(&[
        "audit",
        "--props",
        "lef,sef",
        "--instance",
        instance.to_str().unwrap(),
        "--assignment",
        assignment.to_str().unwrap(),
        "--lottery",
        lottery.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(1));
    let text = stdout(&output);
    let lef_report = text.split("}\n{").next().unwrap();
    assert!(lef_report.contains(r#""property": "lef""#));
    assert!(lef_report.contains(r#""verdict": "pass""#));
    assert!(text.contains(r#""property": "sef""#));
    assert!(text.contains(r#""verdict": "fail""#));
}

#[test]
fn lefcheck_guards_against_large_instances() {
    let dir = tempfile::tempdir().unwrap();
    let n = 9;
    let agents: Vec<String> = (1..=n).map(|i| format!("\"{i}\"")).collect();
    let items: Vec<String> = (1..=n).map(|j| format!("\"x{j}\"")).collect();
    let item_list = items.join(", ");
    let prefs: Vec<String> =
        (1..=n).map(|i| format!("\"{i}\": [{item_list}]")).collect();
    let order = agents.join(", ");
    let instance_text = format!(
        "{{ \"agents\": [{}], \"items\": [{}], \"preferences\": {{ {} }}, \
         \"priority\": [{{ \"order\": [{}], \"weight\": \"1\" }}] }}",
        agents.join(", "),
        item_list,
        prefs.join(", "),
        order
    );
    let instance = dir.path().join("big.json");
    std::fs::write(&instance, instance_text).unwrap();
    let rows: Vec<String> = (1..=n).map(|i| format!("\"{i}\": {{ \"x{i}\": \"1\" }}")).collect();
    let assignment = dir.path().join("diag.json");
    std::fs::write(&assignment, format!("{{ \"matrix\": {{ {} }} }}", rows.join(", "))).unwrap();
    let output = run(&[
        "lefcheck",
        "--instance",
        instance.to_str().unwrap(),
        "--assignment",
        assignment.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr(&output).contains("limited to 8 agents"));
}

#[test]
fn decompose_permutation_matrix_yields_single_entry() {
    let dir = tempfile::tempdir().unwrap();
    let assignment = dir.path().join("perm.json");
    std::fs::write(
        &assignment,
        r#"{ "matrix": {
            "1": { "b": "1" },
            "2": { "a": "1" }
        } }"#,
    )
    .unwrap();
    let output = run(&["decompose", "--assignment", assignment.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(0));
    let parsed: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    let entries = parsed.as_array().unwrap();
    assert_eq!(entries.len(), 1);
    assert_eq!(entries[0]["weight"], "1");
    assert_eq!(entries[0]["assignment"]["1"], "b");
    assert_eq!(entries[0]["assignment"]["2"], "a");
}

#[test]
fn experiment_rejects_inconsistent_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.csv");
    let output = run(&[
        "experiment",
        "--schools",
        "2",
        "--beta",
        "0.5",
        "--bias-model",
        "multiplicative",
        "--students",
        "5",
        "--disadvantaged",
        "9",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr(&output).contains("disadvantaged"));
}

#[test]
fn thread_cap_env_is_validated() {
    let output = Command::new(env!("CARGO_BIN_EXE_fair-assign"))
        .env("FAIR_ASSIGN_THREADS", "lots")
        .args(["solve", "--alg", "ce", "--instance", "x.json"])
        .output()
        .expect("binary runs");
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr(&output).contains("FAIR_ASSIGN_THREADS"));

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ce.json");
    let ok = Command::new(env!("CARGO_BIN_EXE_fair-assign"))
        .env("FAIR_ASSIGN_THREADS", "2")
        .args([
            "solve",
            "--alg",
            "ce",
            "--instance",
            fixtures().join("crossed_pairs.json").to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .expect("binary runs");
    assert_eq!(ok.status.code(), Some(0));
}
