use std::path::PathBuf;
use std::process::Command;

use orthosub_cli::{run, EXIT_BOUND, EXIT_INPUT, EXIT_OK, EXIT_USAGE};
use serde_json::Value;

fn invoke(args: &[&str]) -> orthosub_cli::Outcome {
    run(std::iter::once("orthosub").chain(args.iter().copied()))
}

fn json(args: &[&str]) -> Value {
    let mut full = args.to_vec();
    full.extend(["--format", "json"]);
    let out = invoke(&full);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    serde_json::from_str(&out.stdout).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("orthosub-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn quantum_runs_are_exact() {
    for extra in [None, Some("--skip-step3")] {
        let mut args = vec!["quantum", "--n", "4", "--trials", "1000", "--seed", "7"];
        args.extend(extra);
        let out = invoke(&args);
        assert_eq!(out.code, EXIT_OK);
        assert!(out.stdout.contains("success: 1000/1000"), "{}", out.stdout);
        assert!(out.stdout.contains("oracle evaluations per run: 2"));
    }
}

#[test]
fn quantum_rejects_one_bit() {
    let out = invoke(&["quantum", "--n", "1", "--trials", "10"]);
    assert_eq!(out.code, EXIT_USAGE);
    assert!(out.stderr.contains("--n"));
    assert_eq!(invoke(&["quantum", "--n", "3", "--trials", "0"]).code, EXIT_USAGE);
    assert_eq!(invoke(&["quantum"]).code, EXIT_USAGE);
    assert_eq!(invoke(&["no-such-command"]).code, EXIT_USAGE);
}

#[test]
fn reproduce_example_signs() {
    let out = invoke(&["reproduce-example"]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stdout);
    let block: Vec<&str> = out
        .stdout
        .lines()
        .skip_while(|l| !l.starts_with("final candidates"))
        .skip(1)
        .take(4)
        .collect();
    assert_eq!(
        block,
        [
            "  +0.500000000000 0010",
            "  +0.500000000000 1000",
            "  -0.500000000000 0101",
            "  -0.500000000000 1111",
        ]
    );
    assert!(out.stdout.contains("worked-example superpositions: match"));
    assert!(out.stdout.contains("verdict: match"));
}

#[test]
fn reproduce_example_is_byte_identical() {
    for format in ["text", "json", "csv"] {
        let a = invoke(&["reproduce-example", "--seed", "11", "--format", format]);
        let b = invoke(&["reproduce-example", "--seed", "11", "--format", format]);
        assert_eq!(a, b);
    }
}

#[test]
fn reproduce_example_other_branch() {
    let v = json(&["reproduce-example", "--force-branch", "00"]);
    assert_eq!(v["matches"], true);
    assert!(v["reference_matches"].is_null());
    let step3 = v["steps"].as_array().unwrap().iter().find(|s| s["step"] == 3).unwrap();
    let points: Vec<(String, String)> = step3["amplitudes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| (a["x"].as_str().unwrap().to_owned(), a["y"].as_str().unwrap().to_owned()))
        .collect();
    let want = [("0000", "000"), ("0101", "000"), ("1001", "001"), ("1100", "001")];
    assert_eq!(points, want.map(|(x, y)| (x.to_owned(), y.to_owned())));
}

#[test]
fn reproduce_example_input_errors() {
    let bad = scratch("corrupt.json");
    std::fs::write(&bad, "{\"n\": 4, \"s\": \"0101\"").unwrap();
    let out = invoke(&["reproduce-example", "--fixture", bad.to_str().unwrap()]);
    assert_eq!(out.code, EXIT_INPUT);
    let missing = scratch("missing.json");
    let out = invoke(&["reproduce-example", "--fixture", missing.to_str().unwrap()]);
    assert_eq!(out.code, EXIT_INPUT);
    assert_eq!(invoke(&["reproduce-example", "--force-branch", "011"]).code, EXIT_USAGE);
}

#[test]
fn classical_two_bits_is_one_third() {
    let v = json(&["classical", "--n", "2", "--k", "1", "--trials", "100000"]);
    assert_eq!(v["exact_success"], "1/3");
    let low = v["success_ci"]["low"].as_f64().unwrap();
    let high = v["success_ci"]["high"].as_f64().unwrap();
    assert!(low <= 1.0 / 3.0 && 1.0 / 3.0 <= high);
}

#[test]
fn classical_nine_bits() {
    let v = json(&["classical", "--n", "9", "--k", "8", "--trials", "100000", "--seed", "3"]);
    let rate = v["success_rate"].as_f64().unwrap();
    assert!(rate > 1.0 / 3.0 && v["success_ci"]["high"].as_f64().unwrap() < 0.75);
    // 28 distinct differences among 8 queries
    assert_eq!(v["predicted_event_E_exact"], "4/73");
    let predicted = 28.0 / 511.0;
    assert!(v["event_E_ci"]["low"].as_f64().unwrap() <= predicted);
    assert!(predicted <= v["event_E_ci"]["high"].as_f64().unwrap());
    assert_eq!(v["collision_mismatches"], 0);
}

#[test]
fn classical_budget_check() {
    let out = invoke(&["classical", "--n", "3", "--k", "10", "--check-bounds"]);
    assert_eq!(out.code, EXIT_USAGE);
    // without the flag the budget is explored but no ceiling applies
    let out = invoke(&["classical", "--n", "3", "--k", "6", "--trials", "2000"]);
    assert_eq!(out.code, EXIT_OK);
    assert!(out.stdout.contains("not applicable"));
    assert_ne!(out.code, EXIT_BOUND);
}

#[test]
fn classical_csv_header() {
    let out = invoke(&["classical", "--n", "6", "--trials", "500", "--format", "csv"]);
    assert_eq!(out.code, EXIT_OK);
    let header = out.stdout.lines().next().unwrap();
    assert_eq!(
        header,
        "n,k,trials,success_rate,ci_low,ci_high,event_E_rate,paper_bound,conditional_bound"
    );
}

#[test]
fn classical_output_ignores_worker_count() {
    let args = ["classical", "--n", "7", "--trials", "5000", "--seed", "9", "--format", "json"];
    let one = invoke(&[&args[..], &["--workers", "1"]].concat());
    let three = invoke(&[&args[..], &["--workers", "3"]].concat());
    assert_eq!(one.code, EXIT_OK);
    assert_eq!(one, three);
    let q1 = invoke(&["quantum", "--n", "5", "--trials", "3000", "--workers", "1", "--format", "json"]);
    let q2 = invoke(&["quantum", "--n", "5", "--trials", "3000", "--workers", "2", "--format", "json"]);
    assert_eq!(q1, q2);
}

#[test]
fn count_examples() {
    let v = json(&["count", "--n", "3", "--k", "1"]);
    assert_eq!(v["formula_total"], "42");
    assert_eq!(v["brute_force_total"], 42);
    assert_eq!(v["matches"], true);

    let out = invoke(&["count", "--n", "3", "--queries", "000,011", "--answers", "01,01"]);
    assert_eq!(out.code, EXIT_USAGE);
    assert!(out.stderr.contains("event E"));

    let fixture = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/fixtures/example_n4.json");
    let v = json(&["count", "--n", "4", "--queries", "0000,0001", "--oracle", fixture]);
    assert_eq!(v["m"], 1);
    assert_eq!(v["compatible_shifts"], "14");
    assert_eq!(v["functions_per_shift"], "720");
    assert_eq!(v["formula_total"], "10080");
    assert_eq!(v["brute_force_total"], 10080);
    assert_eq!(v["matches"], true);
}

#[test]
fn count_usage_errors() {
    assert_eq!(invoke(&["count", "--n", "5", "--brute-force"]).code, EXIT_USAGE);
    assert_eq!(invoke(&["count", "--n", "3", "--queries", "000,000"]).code, EXIT_USAGE);
    assert_eq!(invoke(&["count", "--n", "3", "--queries", "00"]).code, EXIT_USAGE);
    assert_eq!(
        invoke(&["count", "--n", "3", "--queries", "000,001", "--answers", "00"]).code,
        EXIT_USAGE
    );
    // formula only past the enumeration range
    let out = invoke(&["count", "--n", "6"]);
    assert_eq!(out.code, EXIT_OK);
    assert!(out.stdout.contains("verdict: formula only"));
}

#[test]
fn verify_lemma_modes() {
    let v = json(&["verify-lemma", "--n", "3"]);
    assert_eq!(v["exhaustive"], true);
    assert_eq!(v["cases"], 7 * 8 * 6);
    assert_eq!(v["passed"], v["cases"]);
    let v = json(&["verify-lemma", "--n", "6", "--trials", "200"]);
    assert_eq!(v["exhaustive"], false);
    assert_eq!(v["passed"], 200);
}

#[test]
fn contrast_headline() {
    let out = invoke(&["contrast", "--n", "9", "--trials", "100000", "--quantum-trials", "1000"]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    let mut lines = out.stdout.lines().skip(1);
    let quantum = lines.next().unwrap();
    let classical = lines.next().unwrap();
    println!("{quantum}\n{classical}");
    assert!(quantum.contains("1000/1000") && quantum.contains("(100.00%)"));
    assert!(quantum.contains("2 oracle evaluations per run"));
    assert!(classical.contains("k = 8 queries"));
    let v = json(&["contrast", "--n", "9", "--trials", "100000", "--quantum-trials", "1000"]);
    assert!(v["classical"]["success_ci"]["high"].as_f64().unwrap() < 0.75);
}

#[test]
fn config_override_and_out_file() {
    let config = scratch("config.json");
    std::fs::write(&config, r#"{"n": 3, "trials": 64, "format": "json"}"#).unwrap();
    let target = scratch("report.json");
    let out = invoke(&[
        "quantum",
        "--n",
        "8",
        "--config",
        config.to_str().unwrap(),
        "--out",
        target.to_str().unwrap(),
    ]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    assert_eq!(v["n"], 3);
    assert_eq!(v["trials"], 64);

    std::fs::write(&config, r#"{"unknown": 1}"#).unwrap();
    let out = invoke(&["quantum", "--n", "3", "--config", config.to_str().unwrap()]);
    assert_eq!(out.code, EXIT_INPUT);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_orthosub");
    let ok = Command::new(bin).args(["reproduce-example"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(EXIT_OK));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("verdict: match"));
    let usage = Command::new(bin).args(["quantum", "--n", "1"]).output().unwrap();
    assert_eq!(usage.status.code(), Some(EXIT_USAGE));
    let help = Command::new(bin).args(["--help"]).output().unwrap();
    assert_eq!(help.status.code(), Some(0));
}
