use std::path::Path;
use std::process::{Command, Output};

fn lgl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lgl")).args(args).output().expect("run lgl")
}

fn ok(args: &[&str]) -> String {
    let out = lgl(args);
    assert!(out.status.success(), "lgl {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn network(dir: &Path) -> String {
    let path = dir.join("net.json");
    let p = path.to_str().unwrap().to_string();
    ok(&["generate", "--k", "5", "--in-degree", "2", "--weight-max", "0.5", "--seed", "7", "--out", &p]);
    p
}

#[test]
fn generate_is_deterministic_and_loadable() {
    let a = ok(&["generate", "--topology", "feedforward", "--layers", "3", "--width", "4", "--in-degree", "2", "--seed", "1"]);
    let b = ok(&["generate", "--topology", "feedforward", "--layers", "3", "--width", "4", "--in-degree", "2", "--seed", "1"]);
    assert_eq!(a, b);
    let spec = rmf_core::NetworkSpec::load(&a).unwrap();
    assert_eq!(spec.len(), 12);
    let s = ok(&["generate", "--scenario", "sparse-feedforward"]);
    assert_eq!(rmf_core::NetworkSpec::load(&s).unwrap().len(), 400);
}

#[test]
fn simulate_and_solve_csv() {
    let dir = tempfile::tempdir().unwrap();
    let net = network(dir.path());
    let sim = ok(&["simulate", "--spec", &net, "--events", "5000", "--seed", "3"]);
    assert!(sim.starts_with("neuron,rate,spikes\n"));
    assert_eq!(sim.lines().count(), 6);
    let rep = ok(&["simulate", "--spec", &net, "--events", "5000", "--replicas", "3"]);
    assert_eq!(rep.lines().count(), 6);
    for cmd in ["solve-rmf", "solve-tmf"] {
        let out = ok(&[cmd, "--spec", &net, "--max-iter", "100", "--fp-tol", "1e-9"]);
        let mut lines = out.lines();
        assert_eq!(lines.next(), Some("neuron,beta,iterations,converged,residual"));
        assert!(lines.all(|l| l.split(',').nth(3) == Some("true")));
    }
}

#[test]
fn json_output_parses() {
    let dir = tempfile::tempdir().unwrap();
    let net = network(dir.path());
    let out = ok(&["solve-rmf", "--spec", &net, "--format", "json", "--max-iter", "100"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["beta"].as_array().unwrap().len(), 5);
    assert!(v["converged"].as_bool().unwrap());
}

#[test]
fn compare_writes_table_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let net = network(dir.path());
    let out = dir.path().join("cmp.csv");
    let o = out.to_str().unwrap();
    let args = ["compare", "--spec", &net, "--events", "20000", "--max-iter", "100", "--seed", "5", "--out", o];
    ok(&args);
    let table = std::fs::read_to_string(&out).unwrap();
    assert!(table.starts_with("neuron,rate_sim,rate_rmf,rate_tmf,err_rmf,err_tmf\n"));
    let summary = std::fs::read_to_string(dir.path().join("cmp.summary.csv")).unwrap();
    let lines: Vec<_> = summary.lines().collect();
    assert_eq!(lines[0], "method,mean_rel_err,max_rel_err");
    assert!(lines[1].starts_with("rmf,") && lines[2].starts_with("tmf,"));
    ok(&args);
    assert_eq!(std::fs::read_to_string(&out).unwrap(), table);
}

#[test]
fn scenario_and_replica() {
    let out = ok(&["scenario", "sparse-recurrent", "--events", "20000"]);
    assert_eq!(out.lines().count(), 101);
    let bad = lgl(&["scenario", "everything"]);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("unknown scenario"));

    let dir = tempfile::tempdir().unwrap();
    let net = network(dir.path());
    let rows = ok(&["replica", "--spec", &net, "--m", "2,4", "--events", "10000", "--max-iter", "100"]);
    assert!(rows.starts_with("M,class,rate,gap\n"));
    assert_eq!(rows.lines().count(), 11);
}

#[test]
fn transfer_sweeps() {
    let out = ok(&["transfer", "--from", "1", "--to", "100", "--points", "3"]);
    let lines: Vec<_> = out.lines().collect();
    assert_eq!(lines[0], "sweep_value,F,sqrt_asymptote,beta_bar,corrected");
    assert_eq!(lines.len(), 4);
    let w = ok(&["transfer", "--sweep", "weight", "--fixed", "1", "--from", "1e4", "--to", "1e4", "--points", "1"]);
    let row: Vec<f64> = w.lines().nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(row[3], 3.0);
    assert!((row[1] - row[4]).abs() < 0.05 * row[4]);
    assert!(!lgl(&["transfer", "--format", "json"]).status.success());
}

#[test]
fn invalid_spec_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"K":1,"tau":[1.0],"b":[1.0],"r":[0.0],"synapses":[]}"#).unwrap();
    let out = lgl(&["solve-rmf", "--spec", path.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("reset must be strictly positive"));
}
