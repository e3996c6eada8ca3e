use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_resurgia"))
        .args(args)
        .env_remove("RESURGIA_PRECISION")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn c(v: &Value) -> (f64, f64) {
    (v[0].as_f64().unwrap(), v[1].as_f64().unwrap())
}

#[test]
fn exact_mode_reports_terms() {
    let out = run(&["emsum", "--f", "exp(x)", "--N", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["tool"], "resurgia");
    assert_eq!(v["config"]["precision_digits"], 16);
    let r = &v["result"];
    assert!(r["residual"].as_f64().unwrap() < 1e-11);
    let sum = c(&r["integral_term"]).0 + c(&r["boundary_term"]).0 + c(&r["laplace_term"]).0;
    assert!((sum - c(&r["oracle"]).0).abs() < 1e-11);
}

#[test]
fn output_is_deterministic() {
    let args = ["emsum", "--f", "1/(x+2)", "--N", "4,9", "--mode", "transseries"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&a)["result"].as_array().unwrap().len(), 2);
}

#[test]
fn csv_layout() {
    let out = run(&["emsum", "--f", "x^2", "--N", "3", "--csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("N,term,value_re,value_im"));
    let total = lines.find(|l| l.starts_with("3,total,")).unwrap();
    let re: f64 = total.split(',').nth(2).unwrap().parse().unwrap();
    assert!((re - 14.0 / 9.0).abs() < 1e-12);
}

#[test]
fn strip_singularity_exits_two_with_report() {
    let out = run(&["emsum", "--f", "1/(x-1/2)", "--N", "10"]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert_eq!(v["error"]["code"], "E_HYPOTHESIS");
    assert_eq!(v["error"]["report"]["singularities_ok"], false);
}

#[test]
fn transseries_handles_complex_pole() {
    let out = run(&["emsum", "--f", "1/(x-0.5-0.3*i)", "--N", "10", "--mode", "transseries"]);
    assert_eq!(out.status.code(), Some(0));
    let r = &json(&out)["result"];
    assert!(r["residual"].as_f64().unwrap() < 1e-10);
    assert!(!r["corrections"].as_array().unwrap().is_empty());
}

#[test]
fn usage_errors() {
    assert_eq!(run(&["emsum", "--f", "x", "--N", "3", "--bogus"]).status.code(), Some(64));
    assert_eq!(run(&["emsum", "--f", "x", "--N", "0"]).status.code(), Some(64));
    assert_eq!(run(&["emsum", "--f", "x", "--N", "3", "--tol", "0.5"]).status.code(), Some(64));
    let out = run(&["emsum", "--f", "x +", "--N", "3"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["error"]["code"], "E_SYNTAX");
}

#[test]
fn borel_eval_routes_agree() {
    let s = json(&run(&["borel", "eval", "--f", "1/(x+2)", "--p", "1,0.5", "--route", "series"]));
    let i = json(&run(&["borel", "eval", "--f", "1/(x+2)", "--p", "1,0.5", "--route", "integral"]));
    assert_eq!(s["result"]["route"], "series");
    assert_eq!(i["result"]["route"], "integral");
    let (a, b) = (c(&s["result"]["value"]), c(&i["result"]["value"]));
    assert!((a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9);
}

#[test]
fn borel_sing_csv() {
    let out = run(&["borel", "sing", "--f", "1/(x+2)", "--radius", "30"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "p_re,p_im,omega_re,omega_im,n,shifted");
    // 2πin(−2) and 2πin(−3), |p| ≤ 30
    assert_eq!(rows.len() - 1, 4 + 2);
}

#[test]
fn stirling_matches_factorial() {
    let v = json(&run(&["stirling", "--N", "12"]));
    assert!(v["result"]["difference"].as_f64().unwrap().abs() < 1e-10);
}

#[test]
fn wkb_verify() {
    let v = json(&run(&["wkb", "--a", "1+x/2", "--x", "0.8", "--eps", "0.1", "--verify", "--coeffs", "3"]));
    assert!(v["result"]["residual"].as_f64().unwrap() < 1e-10);
    assert_eq!(v["result"]["asymptotics"]["coeffs"].as_array().unwrap().len(), 4);
}

#[test]
fn qtop_series_and_probe() {
    let out = run(&["qtop", "--t", "0,1,1", "--roots", "4", "--series", "8"]);
    assert_eq!(out.status.code(), Some(0));
    let d = &json(&out)["result"]["data"];
    assert_eq!(d["roots"].as_array().unwrap().len(), 4);
    assert_eq!(d["formal"][0], "1");
    assert_eq!(d["l_p"].as_array().unwrap().len(), 8);
    let out = run(&["qtop", "--t", "0,0,1"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["error"]["code"], "E_UNSUPPORTED");
}

#[test]
fn check_reports_hypotheses() {
    let ok = run(&["check", "--f", "exp(x)"]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(json(&ok)["result"]["A1"]["holds"], true);
    let bad = run(&["check", "--f", "1/(x-1/2)"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn precision_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_resurgia"))
        .args(["emsum", "--f", "1/(x+2)", "--N", "10"])
        .env("RESURGIA_PRECISION", "40")
        .output()
        .unwrap();
    let v = json(&out);
    assert_eq!(v["config"]["precision_digits"], 40);
    let dec = v["result"]["total_decimal"][0].as_str().unwrap();
    assert!(dec.starts_with("3.97247473776706371784"), "{dec}");
}

#[test]
fn selftest_subset() {
    let out = run(&["selftest", "--only", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["result"]["criteria"].as_array().unwrap().len(), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("criterion 2 [PASS]"));
}
