use std::f64::consts::PI;
use std::process::{Command, Output};

use serde_json::Value;

fn problems_dir() -> String {
    format!("{}/problems", env!("CARGO_MANIFEST_DIR"))
}

fn run_with_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sl-krein"));
    cmd.args(args).current_dir(problems_dir()).env_remove("SL_KREIN_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn run(args: &[&str]) -> Output {
    run_with_env(args, &[])
}

fn json_ok(args: &[&str]) -> Value {
    let out = run(args);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stderr.is_empty(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn num(v: &Value) -> f64 {
    v.as_f64().expect("number")
}

fn complex(v: &Value) -> (f64, f64) {
    (num(&v[0]), num(&v[1]))
}

#[test]
fn eigs_free_pi_dirichlet() {
    let v = json_ok(&["eigs", "-p", "free-pi.json", "--bc", "dirichlet", "--window", "0.5", "10"]);
    let got: Vec<f64> = v["eigenvalues"].as_array().unwrap().iter().map(|e| num(&e["lambda"])).collect();
    assert_eq!(got.len(), 3);
    for (l, want) in got.iter().zip([1.0, 4.0, 9.0]) {
        assert!((l - want).abs() < 1e-8);
    }
}

#[test]
fn missing_window_is_a_usage_error() {
    let out = run(&["eigs", "-p", "free-pi.json", "--bc", "dirichlet"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--window"));
}

#[test]
fn kvn_resolves_from_the_problem() {
    let v = json_ok(&["eigs", "-p", "free-unit.json", "--bc", "kvn", "--window", "-1", "50"]);
    assert_eq!(v["bc"]["kind"], "coupled");
    let f = &v["bc"]["F"];
    assert!((num(&f[0][1]) - 1.0).abs() < 1e-8 && num(&f[1][0]).abs() < 1e-8);
    let first = &v["eigenvalues"][0];
    assert_eq!(first["mult"], 2);
    assert!(num(&first["lambda"]).abs() < 1e-6);
}

#[test]
fn bdm_closed_form_and_checks() {
    let v = json_ok(&["bdm", "-p", "free-unit.json", "--from", "dirichlet", "--to", "neumann", "--z", "-1"]);
    let m = &v["values"][0]["lambda"];
    let (coth, csch) = (1.0 / 1f64.tanh(), 1.0 / 1f64.sinh());
    for (k, want) in [-coth, csch, csch, -coth].iter().enumerate() {
        let (re, im) = complex(&m[k]);
        assert!((re - want).abs() < 1e-8 && im.abs() < 1e-12);
    }

    let h = json_ok(&[
        "bdm",
        "-p",
        "free-unit",
        "--from",
        "dirichlet",
        "--to",
        "neumann",
        "--check",
        "herglotz",
        "--z",
        "0+1i",
    ]);
    assert!(num(&h["min_eig"]) > 0.0);

    let g = json_ok(&[
        "bdm",
        "-p",
        "step-q",
        "--from",
        "neumann",
        "--to",
        "periodic",
        "--check",
        "group",
        "--z",
        "1+1i,-2-3i",
        "--z",
        "-5",
    ]);
    assert_eq!(g["points"], 3);
    assert!(num(&g["max_residual"]) < 1e-8);
}

#[test]
fn spectral_point_exits_3() {
    let out = run(&["bdm", "-p", "free-pi.json", "--from", "dirichlet", "--to", "neumann", "--z", "1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("z = 1"));
}

#[test]
fn input_errors_exit_2() {
    for args in [
        vec!["eigs", "-p", "cubic", "--bc", "dirichlet", "--window", "0", "1"],
        vec!["eigs", "-p", "free-unit", "--bc", "{\"kind\":\"separated\"}", "--window", "0", "1"],
        vec!["eigs", "-p", "free-unit", "--bc", "robin", "--window", "0", "1"],
        vec!["eigs", "--bc", "dirichlet", "--window", "0", "1"],
        vec!["bdm", "-p", "free-unit", "--from", "dirichlet", "--to", "neumann", "--z", "x"],
        vec!["bdm", "-p", "free-unit", "--from", "dirichlet", "--to", "neumann", "--check", "herglotz", "--z", "0-1i"],
        vec!["convert", "--bc", "dirichlet", "--format", "csv"],
        vec!["convert", "--bc", "kvn"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn convert_examples() {
    let v = json_ok(&["convert", "--bc", r#"{"kind":"separated","theta_a":0,"theta_b":0}"#, "--to", "unitary"]);
    let u = &v["U"];
    for (k, want) in [-1.0, 0.0, 0.0, -1.0].iter().enumerate() {
        assert_eq!(complex(&u[k]), (*want, 0.0));
    }
    let c = json_ok(&["convert", "--bc", "periodic", "--to", "canonical"]);
    assert_eq!(c["bc"]["kind"], "coupled");
    let dn = json_ok(&["convert", "--bc", r#"{"kind":"separated","theta_a":1.0,"theta_b":2.0}"#, "--to", "dn"]);
    assert_eq!(dn["bc"]["kind"], "dn");
    assert!(num(&dn["round_trip_error"]) < 1e-10);
}

#[test]
fn ssf_examples() {
    let v = json_ok(&["ssf", "-p", "free-unit.json", "--from", "dirichlet", "--to", "neumann", "--lmax", "50"]);
    assert_eq!(v["base"], 0);
    let jumps = v["jumps"].as_array().unwrap();
    assert_eq!(jumps.len(), 1);
    assert!(num(&jumps[0]["at"]).abs() < 1e-8 && jumps[0]["value"] == -1);

    let b = json_ok(&[
        "ssf", "-p", "step-q", "--from", "neumann", "--to", "periodic", "--lmax", "60", "--lambda", "5", "20", "40",
    ]);
    assert_eq!(b["boundary"]["rounded"].as_array().unwrap().len(), 3);
}

#[test]
fn trace_example() {
    let v = json_ok(&["trace", "-p", "free-unit.json", "--from", "dirichlet", "--to", "neumann", "--z", "-1"]);
    let c = &v["checks"][0];
    assert!((num(&c["lhs"][0]) - 1.0).abs() < 1e-6 && (num(&c["rhs"][0]) - 1.0).abs() < 1e-6);
}

#[test]
fn krein_and_vn() {
    let k = json_ok(&["krein", "-p", "step-q", "--target", "kvn", "--reference", "neumann", "--z", "-1,0+2i"]);
    assert!(num(&k["max_residual"]) < 1e-6);
    assert_eq!(k["points"][0]["correction"], "matrix2");

    let d = json_ok(&["vn", "-p", "free-unit", "--bc", "dirichlet"]);
    assert_eq!(d["basis"], "pair");
    assert_eq!(complex(&d["U"][0]), (-1.0, 0.0));
    let n = json_ok(&["vn", "-p", "free-unit", "--bc", "neumann", "--reference", "dirichlet"]);
    assert_eq!(n["basis"], "gamma:dirichlet");
    assert!(num(&n["isometry_residual"]) < 1e-7);
    let sep = r#"{"kind":"separated","theta_a":1.5707963267948966,"theta_b":1.5707963267948966}"#;
    let closed = json_ok(&["vn", "-p", "free-unit", "--bc", sep]);
    let aligned = json_ok(&["vn", "-p", "free-unit", "--bc", "neumann", "--reference", "dirichlet", "--basis", "pair"]);
    for k in 0..4 {
        let (a, b) = (complex(&closed["U"][k]), complex(&aligned["U"][k]));
        assert!((a.0 - b.0).abs() < 1e-7 && (a.1 - b.1).abs() < 1e-7);
    }
}

#[test]
fn green_matches_closed_form() {
    // Dirichlet Green's function of -u'' + u on (0, 1): sinh(x<) sinh(1 - x>) / sinh(1).
    let v = json_ok(&["green", "-p", "free-unit", "--bc", "dirichlet", "--z", "-1", "--x", "0.3", "--xp", "0.7"]);
    let (re, im) = complex(&v["values"][0]["g"]);
    let want = 0.3f64.sinh() * 0.3f64.sinh() / 1f64.sinh();
    assert!((re - want).abs() < 1e-8 && im.abs() < 1e-12);
}

#[test]
fn output_is_deterministic_and_csv_works() {
    let args = ["bdm", "-p", "step-q", "--from", "dirichlet", "--to", "periodic", "--z", "1+1i,-3"];
    let (a, b) = (run(&args), run(&args));
    assert_eq!(a.stdout, b.stdout);
    let csv = run(&["eigs", "-p", "free-pi", "--bc", "neumann", "--window", "-0.5", "5", "--format", "csv"]);
    let text = String::from_utf8(csv.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "lambda,multiplicity");
    assert_eq!(lines.len(), 4);

    let path = std::env::temp_dir().join(format!("sl-krein-cli-test-{}.json", std::process::id()));
    let out = run(&["convert", "--bc", "neumann", "-o", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    std::fs::remove_file(&path).ok();
    assert_eq!(complex(&written["U"][0]), (1.0, 0.0));
}

#[test]
fn problem_documents_load() {
    let v = json_ok(&["eigs", "-p", "sampled-p.json", "--bc", "dirichlet", "--window", "0", "30"]);
    assert!(v["count"].as_u64().unwrap() >= 1);
    let s = json_ok(&["eigs", "-p", "step-q.json", "--bc", "dirichlet", "--window", "0", "30"]);
    let first = num(&s["eigenvalues"][0]["lambda"]);
    assert!(first > PI * PI && first < PI * PI + 10.0);
}

#[test]
fn threads_variable() {
    let args = ["vn", "-p", "free-unit", "--bc", "periodic"];
    assert_eq!(run_with_env(&args, &[("SL_KREIN_THREADS", "1")]).status.code(), Some(0));
    assert_eq!(run_with_env(&args, &[("SL_KREIN_THREADS", "0")]).status.code(), Some(2));
}

#[test]
fn verify_reports_and_tightening_fails_honestly() {
    let v = json_ok(&["verify", "--criterion", "2", "9"]);
    assert_eq!(v["passed"], true);
    assert_eq!(v["criteria"].as_array().unwrap().len(), 2);

    let out = run(&["verify", "--criterion", "11", "--tol", "1e-12"]);
    assert_eq!(out.status.code(), Some(4));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["failed"][0], 11);
    assert!(String::from_utf8_lossy(&out.stderr).contains("failed criteria: 11"));
}
