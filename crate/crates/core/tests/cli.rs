use std::process::{Command, Output};

use serde_json::Value;

fn arithfact(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arithfact"))
        .args(["--sieve-limit", "100000"])
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> Value {
    let out = arithfact(args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_str(&stdout(&out)).unwrap()
}

#[test]
fn eval_examples() {
    assert_eq!(
        json(&["eval", "phi", "5"])["factored"],
        serde_json::json!({"2": "5"})
    );
    assert_eq!(json(&["eval", "sigma:0", "1"])["decimal"], "1");
    assert_eq!(json(&["eval", "sigma:1", "3"])["decimal"], "12");
    let table = stdout(&arithfact(&["--format", "table", "eval", "phi", "5"]));
    assert!(table.starts_with("phi(5!) = 2^5"));
    let csv = stdout(&arithfact(&["--format", "csv", "eval", "sigma:2", "3"]));
    assert_eq!(csv, "prime,exponent,kind\n2,1,prime\n5,2,prime\n");
}

#[test]
fn search_examples() {
    let v = json(&["search", "phi", "1", "1", "Z", "100"]);
    assert_eq!(v["solutions"].as_array().unwrap().len(), 3);
    assert_eq!(v["schema"], "arithfact.search/1");
    assert_eq!(v["complete"], true);
    assert_eq!(v["conventions"]["m_min"], 1);

    let csv = stdout(&arithfact(&[
        "--format", "csv", "search", "sigma:0", "1", "2", "Z,Z", "100",
    ]));
    assert!(csv.lines().any(|l| l == "3,2,2"));
    assert!(csv.starts_with("n,m1,m2\n"));

    let v = json(&["search", "phi", "1/3", "1", "Z", "50"]);
    let pairs: Vec<(u64, u64)> = v["solutions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| (s["n"].as_u64().unwrap(), s["m"][0].as_u64().unwrap()))
        .collect();
    assert_eq!(pairs, vec![(3, 3), (4, 4)]);
    let v = json(&["search", "phi", "5", "1", "Z", "10"]);
    let not_cancelled = v["per_n"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|s| s["status"] == "alpha_not_cancelled")
        .count();
    assert!(not_cancelled > 0);
}

#[test]
fn search_output_is_worker_independent() {
    let args = ["search", "sigma:0", "1", "2", "Z,ap:2:0", "500"];
    let one = arithfact(&[&["--workers", "1"], &args[..]].concat());
    let eight = arithfact(&[&["--workers", "8"], &args[..]].concat());
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, eight.stdout);
}

#[test]
fn m_cap_marks_incomplete() {
    let v = json(&["--m-cap", "2", "search", "phi", "1/3", "1", "Z", "10"]);
    assert_eq!(v["complete"], false);
}

#[test]
fn bhargava_examples() {
    assert_eq!(json(&["bhargava", "ap:2,0", "3"])["decimal"], "48");
    assert_eq!(json(&["bhargava", "squares", "2"])["decimal"], "12");
    let v = json(&["bhargava", "explicit:0,1,4,9,16,25,36,49", "3", "--general"]);
    assert_eq!(v["decimal"], "360");
    assert_eq!(v["method"], "p_ordering");
    let v = json(&["bhargava", "Z", "5", "--general"]);
    assert_eq!(v["decimal"], "120");
    assert_eq!(v["general"]["status"], "stable");
}

#[test]
fn verify_examples() {
    let v = json(&["verify", "lemma4", "--n", "100000", "--qmax", "50"]);
    assert_eq!(v["failures"], 0);
    assert!(v["checks_run"].as_u64().unwrap() > 0);
    assert_eq!(json(&["verify", "intervals", "--n", "100"])["failures"], 0);
    let v = json(&["verify", "stewart", "--nmax", "40"]);
    assert_eq!(v["failures"], 0);
    assert!(
        v["suites"][0]["extremal_constants"]["min_largest_over_n"]
            .as_f64()
            .unwrap()
            > 1.0
    );
    let csv = stdout(&arithfact(&[
        "--format", "csv", "verify", "sigma0", "--n", "100",
    ]));
    assert!(csv.starts_with("n,q,lhs,rhs,ok\n100,2,"));
}

#[test]
fn verify_all_csv_writes_directory() {
    let dir = std::env::temp_dir().join(format!("arithfact-cli-{}", std::process::id()));
    let out = arithfact(&[
        "--format",
        "csv",
        "--out",
        dir.to_str().unwrap(),
        "verify",
        "all",
        "--n",
        "2000",
        "--nmax",
        "20",
    ]);
    assert_eq!(out.status.code(), Some(0));
    for suite in [
        "legendre",
        "intervals",
        "lemma4",
        "brun",
        "sigma0",
        "stewart",
    ] {
        assert!(dir.join(format!("{suite}.csv")).exists(), "{suite}");
    }
    std::fs::remove_dir_all(dir).unwrap();
    assert_eq!(
        arithfact(&["--format", "csv", "verify", "all"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn exit_codes() {
    assert_eq!(
        arithfact(&["search", "phi", "0/3", "1", "Z", "10"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        arithfact(&["search", "phi", "1", "2", "Z", "10"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        arithfact(&["search", "phi", "1", "1", "explicit:1,2", "10"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        arithfact(&["search", "phi", "1", "1", "Z", "200000"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(arithfact(&["eval", "phi", "200000"]).status.code(), Some(2));
    assert_eq!(arithfact(&["eval", "tau", "5"]).status.code(), Some(2));
    assert_eq!(
        arithfact(&["bhargava", "Z", "3", "--bit-cap", "1"])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        arithfact(&["verify", "stewart", "--nmin", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(arithfact(&["nonsense"]).status.code(), Some(2));
}

#[test]
fn help_documents_csv_columns() {
    let out = Command::new(env!("CARGO_BIN_EXE_arithfact"))
        .arg("--help")
        .output()
        .unwrap();
    let text = stdout(&out);
    assert!(text.contains("n,m1,...,mr"));
    assert!(text.contains("N,largest_found_prime,complete,stewart_bound,ok"));
}
