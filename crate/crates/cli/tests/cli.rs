use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thorpe-lab")).args(args).env_remove("THORPE_LAB_NCAP").output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

const S4_H4: &str = r#"{"type":"product","factors":[
    {"type":"constant_curvature","n":4,"c":1},{"type":"constant_curvature","n":4,"c":-1}]}"#;

#[test]
fn classify_product_is_four_thorpe() {
    let out = run(&["classify", "--json-inline", S4_H4]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["n"], 8);
    assert_eq!(v["reports"][1]["flags"]["thorpe_2k"], true);
    assert_eq!(v["reports"][1]["flags"]["anti_thorpe_2k"], false);
}

#[test]
fn classify_space_form_is_hyper_einstein() {
    let out = run(&["classify", "--json-inline", r#"{"type":"constant_curvature","n":6,"c":1}"#]);
    let v = json(&out);
    for k in 0..2 {
        assert_eq!(v["reports"][k]["flags"]["einstein_2k"], true);
        assert_eq!(v["reports"][k]["flags"]["hyper_einstein_2k"], true);
    }
}

#[test]
fn lovelock_tensor_vanishes_in_dimension_four() {
    let out = run(&["classify", "--json-inline", r#"{"type":"random_bianchi","n":4,"terms":3,"seed":7}"#]);
    let t4 = json(&out)["reports"][1]["residuals"]["lovelock_norm"].as_f64().unwrap();
    assert!(t4 < 1e-10, "{t4}");
}

#[test]
fn verify_filters_and_fails_below_rounding() {
    let out = run(&["verify", "--only", "avez", "--n", "4", "--seeds", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let cases = json(&out)["cases"].as_array().unwrap().clone();
    assert_eq!(cases.len(), 1);
    assert_eq!(cases[0]["name"], "avez");

    let out = run(&["verify", "--only", "gen_lanczos", "--n", "6", "--seeds", "0..3", "--tolerance", "1e-15"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["pass"], false);
}

#[test]
fn verify_reads_a_config_and_reports_constants() {
    let cfg = r#"{"n_min":5,"n_max":5,"p_min":2,"p_max":2,"seeds":[1],"only":["hyper_identity"]}"#;
    let v = json(&run(&["verify", "--json-inline", cfg]));
    assert_eq!(v["constants"][0]["c"], 0.25);
    let v = json(&run(&["verify", "--seeds", ""]));
    assert_eq!(v["cases"].as_array().unwrap().len(), 0);
    assert_eq!(v["pass"], true);
}

#[test]
fn exit_codes_for_bad_input() {
    assert_eq!(run(&["classify", "--json-inline", "{"]).status.code(), Some(2));
    assert_eq!(run(&["classify"]).status.code(), Some(2));
    assert_eq!(run(&["classify", "--input", "/nonexistent/model.json"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--seeds", "x"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--tolerance", "0"]).status.code(), Some(2));
    let asym = r#"{"type":"conformally_flat","n":2,"schouten":[[1,2],[3,4]]}"#;
    let out = run(&["classify", "--json-inline", asym]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("symmetric"));
    assert_eq!(run(&["verify", "--only", "nope"]).status.code(), Some(3));
    assert_eq!(run(&["constants", "--n", "6", "--p", "3"]).status.code(), Some(3));
}

#[test]
fn dimension_cap_from_flag_and_env() {
    let big = r#"{"type":"constant_curvature","n":10,"c":1}"#;
    assert_eq!(run(&["classify", "--json-inline", big, "--n-cap", "8"]).status.code(), Some(3));
    let out = Command::new(env!("CARGO_BIN_EXE_thorpe-lab"))
        .args(["classify", "--json-inline", big])
        .env("THORPE_LAB_NCAP", "8")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn decompose_product_is_conformally_flat() {
    let sxh = r#"{"type":"product","factors":[
        {"type":"constant_curvature","n":2,"c":1},{"type":"constant_curvature","n":2,"c":-1}]}"#;
    let v = json(&run(&["decompose", "--json-inline", sxh]));
    let norms: Vec<f64> = v["component_norms"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    // R = g A with A = diag(½, ½, −½, −½): trace-free, so only ω_1 = A survives.
    assert!(norms[0] < 1e-12 && (norms[1] - 1.0).abs() < 1e-12 && norms[2] < 1e-12, "{norms:?}");
    assert!(v["round_trip_residual"].as_f64().unwrap() < 1e-12);

    let form = r#"{"n":3,"p":1,"q":1,"coeffs":[1,0,0,0,2,0,0,0,3]}"#;
    let v = json(&run(&["decompose", "--json-inline", form]));
    let w0 = v["components"][0]["coeffs"][0].as_f64().unwrap();
    assert!((w0 - 2.0).abs() < 1e-14, "{w0}");
}

#[test]
fn output_is_byte_deterministic() {
    let args = ["verify", "--n", "5", "--seeds", "0..2"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);

    let path = std::env::temp_dir().join(format!("thorpe-lab-cli-{}.json", std::process::id()));
    let p = path.to_str().unwrap();
    let out = run(&["constants", "--json-inline", r#"{"n":7,"p":3}"#, "--output", p]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let written = std::fs::read(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert_eq!(written, run(&["constants", "--n", "7", "--p", "3"]).stdout);
}
