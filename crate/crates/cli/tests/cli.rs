use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn freeprob(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_freeprob"))
        .args(args)
        .env_remove("FREEPROB_SEED")
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = freeprob(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

#[test]
fn kesten_loops_for_f2() {
    let v = json(&["kesten", "--d", "2", "--nmax", "8"]);
    let loops: Vec<u64> = v["result"]["loops"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_u64().unwrap())
        .collect();
    assert_eq!(loops, [1, 0, 4, 0, 28, 0, 232, 0, 2092]);
    assert_eq!(v["result"]["return_probabilities"][2], "1/4");
    assert_eq!(v["config"]["command"]["d"], 2);
}

#[test]
fn bernoulli_self_convolution_both_routes() {
    let v = json(&["freeconv", "--law-x", "bernoulli", "--law-y", "bernoulli", "--route", "both", "--grid-size", "401"]);
    let exact: Vec<&str> = v["result"]["moment_route"]["moments"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_str().unwrap())
        .collect();
    assert_eq!(exact, ["0", "2", "0", "6", "0", "20"]);
    let numeric = v["result"]["analytic_route"]["moments"].as_array().unwrap();
    assert!((numeric[1].as_f64().unwrap() - 2.0).abs() < 1e-2);
    let density = v["result"]["analytic_route"]["measure"]["density"].as_array().unwrap();
    assert_eq!(density.len(), 401);
}

#[test]
fn wick_genus_expansion() {
    let v = json(&["wick", "--n", "4", "--dim", "10"]);
    assert_eq!(v["result"]["expansion"], "2 + N^-2");
    assert_eq!(v["result"]["value"], "201/100");
}

#[test]
fn weingarten_transposition() {
    let v = json(&["weingarten", "--perm", "(1 2)", "--dim", "3"]);
    assert_eq!(v["result"]["leading"], -1);
    assert_eq!(v["result"]["values"][0]["resummed"], "-1/24");
}

#[test]
fn cumulants_of_a_gaussian() {
    let v = json(&["cumulants", "--moments", "0,1,0,3,0,15"]);
    assert_eq!(v["result"]["classical_cumulants"], serde_json::json!(["0", "1", "0", "0", "0", "0"]));
    assert_eq!(v["result"]["free_cumulants"][3], "1");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(freeprob(&["kesten", "--d", "2", "--bogus"]).status.code(), Some(2));
    assert_eq!(freeprob(&["wick"]).status.code(), Some(2));
    assert_eq!(freeprob(&["kesten", "--d", "0"]).status.code(), Some(2));
    assert_eq!(freeprob(&["wick", "--n", "4", "--format", "csv"]).status.code(), Some(2));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    fs::write(&path, "# walks\nd = 3\nnmax = 4\n").unwrap();
    let p = path.to_str().unwrap();
    let v = json(&["kesten", "--config", p]);
    assert_eq!(v["result"]["loops"].as_array().unwrap().len(), 5);
    let v = json(&["kesten", "--config", p, "--nmax", "6"]);
    assert_eq!(v["result"]["loops"].as_array().unwrap().len(), 7);
    assert_eq!(v["result"]["loops"][2], 6);
}

#[test]
fn seed_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_freeprob"))
        .args(["rmt", "--word", "11", "--n", "8", "--trials", "4"])
        .env("FREEPROB_SEED", "17")
        .output()
        .unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["config"]["seed"], 17);
    let explicit = json(&["rmt", "--word", "11", "--n", "8", "--trials", "4", "--seed", "17"]);
    assert_eq!(v["result"], explicit["result"]);
}

#[test]
fn monte_carlo_is_reproducible_across_workers() {
    let args = ["rmt", "--kind", "gue-gue", "--n", "12", "--trials", "16", "--seed", "5"];
    let a = freeprob(&args);
    let b = freeprob(&args);
    assert_eq!(a.stdout, b.stdout);
    let one = json(&args);
    let mut four = args.to_vec();
    four.extend(["--workers", "4"]);
    let four = json(&four);
    assert_eq!(one["result"], four["result"]);
}

#[test]
fn csv_and_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flow.csv");
    let out = freeprob(&["flow", "--format", "csv", "-o", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = fs::read_to_string(&path).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "h,residual,ratio");
    assert_eq!(rows.len(), 5);
    let ratio: f64 = rows[4].split(',').nth(2).unwrap().parse().unwrap();
    assert!((ratio - 4.0).abs() < 0.05);
}
