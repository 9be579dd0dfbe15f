use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const POISSON3: &str = r#"{
  "resource": 500,
  "groups": [
    {"name": "A", "distribution": {"kind": "poisson", "lambda": 200}},
    {"name": "B", "distribution": {"kind": "poisson", "lambda": 400}},
    {"name": "C", "distribution": {"kind": "poisson", "lambda": 400}}
  ]
}"#;

const CONSTANTS: &str = r#"{
  "resource": 40,
  "groups": [
    {"name": "a", "distribution": {"kind": "constant", "value": 10}},
    {"name": "b", "distribution": {"kind": "constant", "value": 30}}
  ],
  "defaults": {"seed": 7}
}"#;

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn run(scenario: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fairalloc"))
        .args(args)
        .arg("--scenario")
        .arg(scenario)
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "status {} stderr {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout(out)).unwrap()
}

/// Data rows of a CSV report keyed by header name.
fn rows(text: &str) -> Vec<Vec<(String, String)>> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    lines
        .map(|l| {
            header
                .iter()
                .cloned()
                .zip(l.split(',').map(String::from))
                .collect()
        })
        .collect()
}

fn field<'a>(row: &'a [(String, String)], name: &str) -> &'a str {
    &row.iter()
        .find(|(k, _)| k == name)
        .unwrap_or_else(|| panic!("no {name}"))
        .1
}

#[test]
fn allocate_poisson3_is_proportional() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "poisson3.json", POISSON3);
    let text = stdout(&run(&p, &["allocate"]));
    let v: Vec<f64> = rows(&text)
        .iter()
        .map(|r| field(r, "v").parse().unwrap())
        .collect();
    assert_eq!(v, [100.0, 200.0, 200.0]);

    let doc = json(&run(&p, &["allocate", "--format", "json"]));
    assert_eq!(
        doc["result"]["allocation"],
        serde_json::json!([100.0, 200.0, 200.0])
    );
}

#[test]
fn pof_on_constants_is_one() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "constants.json", CONSTANTS);
    let doc = json(&run(&p, &["pof", "--alpha", "0", "--format", "json"]));
    assert!((doc["result"]["pof"].as_f64().unwrap() - 1.0).abs() <= 1e-9);
    assert_eq!(doc["result"]["within_bounds"], true);
}

#[test]
fn certify_reports_exact_deltas() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "poisson3.json", POISSON3);
    let text = stdout(&run(
        &p,
        &["certify", "--epsilon", "0.1", "--method", "exact"],
    ));
    let table = rows(&text);
    assert_eq!(table.len(), 3);
    // Pr[Poisson(200) <= 180] by direct summation.
    let mut term = (-200.0f64).exp();
    let mut cdf = term;
    for x in 1..=180 {
        term *= 200.0 / x as f64;
        cdf += term;
    }
    let got: f64 = field(&table[0], "delta_exact").parse().unwrap();
    assert!((got - cdf).abs() <= 1e-12 * cdf, "{got} vs {cdf}");
    assert_eq!(field(&table[0], "method"), "exact_cdf");
    assert_eq!(field(&table[0], "pass"), "");

    let with_target = stdout(&run(
        &p,
        &["certify", "--epsilon", "0.1", "--target-delta", "0.05"],
    ));
    let passes: Vec<String> = rows(&with_target)
        .iter()
        .map(|r| field(r, "pass").to_string())
        .collect();
    assert_eq!(passes, ["false", "true", "true"]);
}

#[test]
fn evaluate_adds_bound_columns_only_with_epsilon() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "poisson3.json", POISSON3);
    let plain = stdout(&run(&p, &["evaluate"]));
    assert!(!plain.contains("fairness_bound"));
    let bounded = stdout(&run(&p, &["evaluate", "--epsilon", "0.1"]));
    let table = rows(&bounded);
    assert_eq!(field(&table[0], "fairness_ok"), "true");
    assert_eq!(field(&table[0], "utilization_ok"), "true");

    let custom = stdout(&run(&p, &["evaluate", "--allocation", "150,175,175"]));
    let q: Vec<f64> = rows(&custom)
        .iter()
        .map(|r| field(r, "q").parse().unwrap())
        .collect();
    assert!(q[0] > q[1]);
}

#[test]
fn optimize_lists_both_allocations() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "poisson3.json", POISSON3);
    let text = stdout(&run(&p, &["optimize", "--alpha", "0.05"]));
    let table = rows(&text);
    assert_eq!(table.len(), 6);
    assert!(table[..3]
        .iter()
        .all(|r| field(r, "allocation") == "max_utilization"));
    assert!(table[3..]
        .iter()
        .all(|r| field(r, "allocation") == "alpha_fair"));
    let q: f64 = field(&table[3], "Q").parse().unwrap();
    assert!(q <= 0.05 + 1e-6);

    let only_best = stdout(&run(&p, &["optimize"]));
    assert_eq!(rows(&only_best).len(), 3);
}

#[test]
fn reports_are_byte_identical_and_embed_settings() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "poisson3.json", POISSON3);
    let args = ["mc-check", "--samples", "20000", "--seed", "3"];
    let a = run(&p, &args);
    let b = run(&p, &args);
    assert_eq!(stdout(&a), stdout(&b));
    let text = stdout(&a);
    assert!(text.starts_with("# tool=fairalloc version="));
    assert!(text.contains("\"samples\":20000"));
    assert!(text.contains("\"seed\":3"));
    let digest = text.lines().nth(1).unwrap();
    assert_eq!(digest.len(), "# input_sha256=".len() + 64);

    let out = dir.path().join("report.json");
    let status = Command::new(env!("CARGO_BIN_EXE_fairalloc"))
        .args([
            "mc-check",
            "--samples",
            "20000",
            "--format",
            "json",
            "--output",
        ])
        .arg(&out)
        .arg("--scenario")
        .arg(&p)
        .status()
        .unwrap();
    assert!(status.success());
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["meta"]["settings"]["seed"], 42);
    assert_eq!(doc["result"]["pass"], true);
}

#[test]
fn scenario_defaults_fill_unset_flags() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "constants.json", CONSTANTS);
    let doc = json(&run(
        &p,
        &["mc-check", "--samples", "1000", "--format", "json"],
    ));
    assert_eq!(doc["meta"]["settings"]["seed"], 7);
    let doc = json(&run(
        &p,
        &[
            "mc-check",
            "--samples",
            "1000",
            "--seed",
            "9",
            "--format",
            "json",
        ],
    ));
    assert_eq!(doc["meta"]["settings"]["seed"], 9);
}

#[test]
fn curve_defaults_to_twice_the_largest_mean() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "constants.json", CONSTANTS);
    let text = stdout(&run(&p, &["curve", "--steps", "3"]));
    let table = rows(&text);
    assert_eq!(table.len(), 6);
    assert_eq!(field(&table[2], "v").parse::<f64>().unwrap(), 60.0);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "poisson3.json", POISSON3);
    let code = |out: Output| out.status.code().unwrap();

    assert_eq!(code(run(&p, &["pof"])), 1);
    assert_eq!(code(run(&p, &["certify"])), 1);
    assert_eq!(code(run(&p, &["evaluate", "--allocation", "1,2"])), 1);
    assert_eq!(
        code(run(
            &p,
            &["certify", "--epsilon", "0.1", "--method", "chernoff-normal"]
        )),
        1
    );
    assert_eq!(code(run(&p, &["nonsense"])), 1);
    assert_eq!(
        code(run(&dir.path().join("missing.json"), &["allocate"])),
        1
    );

    let bad = write(
        &dir,
        "bad.json",
        r#"{"resource": 5, "groups": [{"name": "A", "distribution": {"kind": "binomial", "n": 0, "p": 0.5}}]}"#,
    );
    let out = run(&bad, &["allocate"]);
    assert_eq!(out.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("n must be ≥ 1"), "{msg}");
    assert!(out.stdout.is_empty());

    let out = run(
        &p,
        &["optimize", "--alpha", "0", "--max-bisection-steps", "2"],
    );
    assert_eq!(out.status.code(), Some(2));

    let help = Command::new(env!("CARGO_BIN_EXE_fairalloc"))
        .arg("--help")
        .output()
        .unwrap();
    assert_eq!(help.status.code(), Some(0));
}

#[test]
fn normal_mass_below_zero_is_warned() {
    let dir = TempDir::new().unwrap();
    let p = write(
        &dir,
        "wide.json",
        r#"{"resource": 5, "groups": [{"name": "N", "distribution": {"kind": "normal", "mu": 2, "sigma": 2}}]}"#,
    );
    let out = run(&p, &["allocate"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}
