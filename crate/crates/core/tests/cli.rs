use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

const CHSH: &str = "1,-1,1,-1,-1,1,-1,1,-1,1,1,-1,1,-1,-1,1";

const CH_DOC: &str = r#"
scenario: "(2,2,2)"
notation: collins-gisin
coefficients: [0, -1, 0, -1, 1, 1, 0, 1, -1]
bounds:
  local: 0
metadata:
  names: [CH]
"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bellcanon"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("structured output is json")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn canon_of_chsh() {
    let o = run(&[
        "canon",
        "--scenario",
        "(2,2,2)",
        "--coefficients",
        CHSH,
        "--bound",
        "2",
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(
        out.contains("canonical: -1 1 -1 1 1 -1 1 -1 -1 1 1 -1 1 -1 -1 1"),
        "{out}"
    );
    assert!(out.contains("local <= 2"));

    let o = run(&[
        "--format",
        "structured",
        "canon",
        "--scenario",
        "(2,2,2)",
        "--coefficients",
        CHSH,
    ]);
    let v = json(&o);
    assert_eq!(v["node"]["leaf"]["scenario"], "[(2 2) (2 2)]");
    assert_eq!(v["node"]["leaf"]["canonical"].as_array().unwrap().len(), 16);
}

#[test]
fn rank_and_unrank_agree() {
    let o = run(&[
        "--format",
        "structured",
        "rank",
        "--scenario",
        "(2,2,2)",
        "--coefficients",
        CHSH,
    ]);
    let v = json(&o);
    assert_eq!(v["orbit_size"], "8");
    let rank = v["rank"].as_str().unwrap().to_string();
    let o = run(&[
        "unrank",
        "--scenario",
        "(2,2,2)",
        "--coefficients",
        CHSH,
        "--rank",
        &rank,
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), CHSH.replace(',', " "));
    let o = run(&[
        "unrank",
        "--scenario",
        "(2,2,2)",
        "--coefficients",
        CHSH,
        "--rank",
        "9",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bounds_and_facets() {
    let o = run(&[
        "local-bound",
        "--scenario",
        "(2,2,2)",
        "--coefficients",
        CHSH,
    ]);
    assert!(stdout(&o).contains("local bound: 2"));
    let o = run(&[
        "facet-check",
        "--scenario",
        "(2,2,2)",
        "--coefficients",
        CHSH,
        "--bound",
        "2",
    ]);
    assert_eq!(stdout(&o).trim(), "facet: true");
    let o = run(&[
        "facet-check",
        "--scenario",
        "(2,2,2)",
        "--coefficients",
        CHSH,
        "--bound",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not the local bound"));
    let o = run(&[
        "facet-check",
        "--scenario",
        "(2,2,2)",
        "--coefficients",
        CHSH,
    ]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&[
        "local-bound",
        "--scenario",
        "(2,2,2)",
        "--coefficients",
        CHSH,
        "--strategy-cap",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn user_errors_exit_one() {
    assert_eq!(run(&["canon"]).status.code(), Some(1));
    assert_eq!(run(&["nonsense"]).status.code(), Some(1));
    assert_eq!(
        run(&["canon", "--scenario", "(2,2,2)", "--coefficients", "1 2 3"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        run(&["canon", "--scenario", "(2,2", "--coefficients", "1"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        run(&["canon", "/nonexistent/file.yaml"]).status.code(),
        Some(1)
    );
    let o = run(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("decompose"));
}

#[test]
fn decompose_composite() {
    // P_A(0|0) P_B(0|0): a product of two positivity factors.
    let o = run(&[
        "--format",
        "structured",
        "decompose",
        "--scenario",
        "(2,2,2)",
        "--coefficients",
        "1 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0",
    ]);
    let v = json(&o);
    let children = v["node"]["product"]["children"].as_array().unwrap();
    assert_eq!(children.len(), 2);
    let o = run(&[
        "decompose",
        "--scenario",
        "(2,2,2)",
        "--coefficients",
        "1 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0",
    ]);
    assert!(stdout(&o).contains("product kappa"));
}

#[test]
fn store_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("db");
    let db = db.to_str().unwrap();
    let ch = write(dir.path(), "ch.yaml", CH_DOC);

    let o = run(&["--format", "structured", "import", &ch, "--db", db]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v[0]["outcome"], "Inserted");
    let key = v[0]["key"].as_str().unwrap().to_string();
    assert_eq!(
        json(&run(&["--format", "structured", "import", &ch, "--db", db]))[0]["outcome"],
        "Unchanged"
    );

    let o = run(&["export", "--db", db, "--key", &key]);
    assert!(o.status.success());
    let doc = stdout(&o);
    assert!(doc.contains("CH"));
    let exported = write(dir.path(), "out.yaml", &doc);
    let o = run(&["canon", &exported]);
    assert!(stdout(&o).contains(&key));
    assert!(run(&[
        "export",
        "--db",
        db,
        "--key",
        &key,
        "--notation",
        "collins-gisin"
    ])
    .status
    .success());
    assert_eq!(
        run(&["export", "--db", db, "--key", "00"]).status.code(),
        Some(1)
    );

    let o = run(&[
        "match",
        "--scenario",
        "(2,2,2)",
        "--coefficients",
        CHSH,
        "--db",
        db,
    ]);
    assert!(stdout(&o).contains("known (CH)"), "{}", stdout(&o));
    let o = run(&[
        "match",
        "--scenario",
        "(2,2,2)",
        "--coefficients",
        "1 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0",
        "--db",
        db,
    ]);
    assert!(stdout(&o).contains("unknown"));

    let o = run(&["db", "rebuild-index", "--db", db]);
    assert_eq!(stdout(&o).trim(), "indexed 1 records");
}

#[test]
fn reads_standard_input() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_bellcanon"))
        .args(["canon", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(CH_DOC.as_bytes())
        .unwrap();
    let o = child.wait_with_output().unwrap();
    assert!(o.status.success());
    assert!(stdout(&o).contains("local <= 2"));
}
