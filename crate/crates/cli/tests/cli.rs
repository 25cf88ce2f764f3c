use std::process::{Command, Output};

use compound_entropy::Pmf;
use serde_json::Value;

fn cent(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cent")).args(args).output().expect("run cent")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn chi_in_bits() {
    let out = cent(&["chi", "--base", "bit"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["entropies"]["compound_binomial"].as_f64().unwrap() < 0.090798);
    assert!(v["entropies"]["compound_bernoulli_sum"].as_f64().unwrap() > 0.090804);
    assert!(v["entropies"]["compound_poisson"].as_f64().unwrap() < 0.090765);
    assert_eq!(v["report"]["status"], "pass");
}

#[test]
fn chi_in_nats_converts() {
    let bits = json(&cent(&["chi", "--base", "bit"]));
    let nats = json(&cent(&["chi"]));
    let b = bits["entropies"]["compound_binomial"].as_f64().unwrap();
    let n = nats["entropies"]["compound_binomial"].as_f64().unwrap();
    assert!((b * std::f64::consts::LN_2 - n).abs() < 1e-15);
}

#[test]
fn maxent_poisson_sweep_passes() {
    let out = cent(&["maxent-poisson", "--q", "uniform:1,2", "--lambda", "4", "--trials", "100", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["instances_run"], 100);
}

#[test]
fn vacuous_sweep_exits_zero() {
    let out = cent(&["maxent-binomial", "--q", "uniform:1,2", "--n", "2", "--lambda", "0.01", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["status"], "vacuous");
    assert_eq!(v["conclusion_holds"], false);
}

#[test]
fn panjer_and_mixture_agree() {
    for (lambda, q) in [("0.01", "uniform:1,2"), ("3", "geometric:0.4"), ("12", "weights:0.2,0.5,0.3")] {
        let a = cent(&["pmf", "--cpo", lambda, "--q", q, "--method", "panjer"]);
        let b = cent(&["pmf", "--cpo", lambda, "--q", q, "--method", "mixture"]);
        let a = Pmf::from_json(std::str::from_utf8(&a.stdout).unwrap()).unwrap();
        let b = Pmf::from_json(std::str::from_utf8(&b.stdout).unwrap()).unwrap();
        assert!(a.sup_distance(&b) <= 1e-10, "{lambda} {q}");
    }
}

#[test]
fn output_is_deterministic_across_job_counts() {
    let args = ["maxent-poisson", "--q", "geometric:0.5", "--lambda", "2", "--trials", "40", "--seed", "3"];
    let one = cent(&[&args[..], &["--jobs", "1"]].concat());
    let four = cent(&[&args[..], &["--jobs", "4"]].concat());
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(one.stdout, cent(&args).stdout);
}

#[test]
fn usage_errors_exit_two() {
    let out = cent(&["chi", "--tol", "-1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--tol"));
    assert_eq!(cent(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(cent(&["maxent-poisson", "--q", "uniform:1,2", "--lambda", "4"]).status.code(), Some(2));
    let out = cent(&["pmf", "--p", "zeta:2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("zeta"));
}

#[test]
fn entropy_and_relative_entropy() {
    let out = cent(&["entropy", "--p", "bernoulli:0.5", "--base", "bit", "--reference", "bernoulli:0.25"]);
    let v = json(&out);
    assert!((v["entropy"].as_f64().unwrap() - 1.0).abs() < 1e-15);
    let d = v["relative_entropy"].as_f64().unwrap();
    assert!((d - 0.143841 / std::f64::consts::LN_2).abs() < 1e-5);
}

#[test]
fn logconcave_shapes_and_conditions() {
    let v = json(&cent(&["logconcave", "--cpo", "0.01", "--q", "uniform:1,2"]));
    assert_eq!(v["log_concave"]["holds"], false);

    let out = cent(&["logconcave", "--condition", "necessary", "--lambda", "0.01", "--q", "uniform:1,2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["claim_id"], "necessary-condition");

    let out = cent(&["logconcave", "--condition", "two-point", "--p", "poisson:4", "--q", "uniform:1,3"]);
    assert_eq!(out.status.code(), Some(2));

    let out = cent(&["logconcave", "--condition", "geometric", "--p", "poisson:2", "--a", "0.5"]);
    assert_eq!(json(&out)["status"], "pass");
}

#[test]
fn hansen_command() {
    let out = cent(&["hansen", "--q", "geometric:0.5", "--lambda", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["status"], "pass");
}

#[test]
fn semigroup_path_csv_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("path.csv");
    let out =
        cent(&["semigroup-path", "--p", "binomial:8,0.25", "--q", "geometric:0.5", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("alpha_or_t,energy"));
    let energies: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(energies.len(), 21);
    assert!(energies.windows(2).all(|w| w[1] <= w[0] + 1e-9));
}

#[test]
fn binomial_path_json() {
    let out = cent(&["binomial-path", "--params", "0.9,0.7", "--q", "uniform:1,2", "--grid", "11", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["ts"].as_array().unwrap().len(), 11);
    assert_eq!(v["monotone_ok"], true);
}

#[test]
fn graph_commands() {
    let out = cent(&["graph", "--family", "path:3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["counts"], serde_json::json!([1, 3, 1]));
    assert_eq!(v["report"]["status"], "pass");

    assert_eq!(json(&cent(&["graph", "--family", "star:3"]))["report"]["status"], "vacuous");

    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("c5.txt");
    std::fs::write(&file, "5\n0 1\n1 2\n2 3\n3 4\n4 0\n").unwrap();
    let v = json(&cent(&["graph", "--file", file.to_str().unwrap()]));
    assert_eq!(v["counts"], serde_json::json!([1, 5, 5]));
}

#[test]
fn matroid_commands() {
    let v = json(&cent(&["matroid", "--uniform", "2,4"]));
    assert_eq!(v["counts"], serde_json::json!([1, 4, 6]));

    let dir = tempfile::tempdir().unwrap();
    let tri = dir.path().join("k3.txt");
    std::fs::write(&tri, "3\n0 1\n1 2\n0 2\n").unwrap();
    let v = json(&cent(&["matroid", "--graphic", tri.to_str().unwrap()]));
    assert_eq!(v["counts"], serde_json::json!([1, 3, 3]));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "[[], [0], [1], [2], [0, 1]]").unwrap();
    let out = cent(&["matroid", "--file", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exchange"));
}
