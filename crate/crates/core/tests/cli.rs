use std::path::Path;
use std::process::{Command, Output};

fn spoisson(args: &[&str], env: &[(&str, &Path)], cwd: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_spoisson"));
    cmd.args(args).current_dir(cwd).env_remove("SPOISSON_OUTPUT_DIR");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn stderr_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|_| panic!("stderr is not JSON: {}", String::from_utf8_lossy(&out.stderr)))
}

#[test]
fn modified_coefficients_of_the_splitting() {
    let dir = tempfile::tempdir().unwrap();
    let out = spoisson(
        &["modified-coeffs", "--system", "maxwell-bloch", "--stepper", "mb-splitting", "--weight", "4", "--point", "1,2,3"],
        &[],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut r = csv::Reader::from_reader(out.stdout.as_slice());
    assert_eq!(r.headers().unwrap(), vec!["point", "alpha0", "alpha1", "alpha2", "c1", "c2", "c3"]);
    let rows: Vec<Vec<String>> = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    let find = |alpha: [&str; 3]| rows.iter().find(|row| row[1..4] == alpha).expect("row present").clone();
    let f200: Vec<f64> = find(["2", "0", "0"])[4..].iter().map(|v| v.parse().unwrap()).collect();
    for (got, want) in f200.iter().zip([1.5, -3.0, 2.0]) {
        assert!((got - want).abs() <= 1e-12, "{f200:?}");
    }
    let f020: Vec<f64> = find(["0", "2", "0"])[4..].iter().map(|v| v.parse().unwrap()).collect();
    assert!(f020.iter().all(|v| v.abs() <= 1e-12));
    assert!(rows.iter().all(|row| row[0] == "0"));
}

#[test]
fn several_points_and_file_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = spoisson(
        &["modified-coeffs", "--system", "pendulum", "--sigma", "0.1", "--kind", "method", "--weight", "3",
          "--point", "1,2", "--point", "-0.5,0.25", "--out", "coeffs"],
        &[],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("coeffs/method_coefficients.csv")).unwrap();
    assert!(text.lines().skip(1).any(|l| l.starts_with("1,")));
    let bad = spoisson(&["modified-coeffs", "--system", "pendulum", "--point", "1,2,3"], &[], dir.path());
    assert!(!bad.status.success());
    assert_eq!(stderr_json(&bad)["error"], "usage");
}

#[test]
fn poisson_check_prints_one_residual_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = spoisson(&["poisson-check", "--system", "maxwell-bloch", "--stepper", "mb-splitting", "--samples", "100"], &[], dir.path());
    assert!(out.status.success());
    let line = String::from_utf8(out.stdout).unwrap();
    assert_eq!(line.lines().count(), 1);
    let value: f64 = line.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!(value <= 1e-9, "{line}");
    let heun = spoisson(&["poisson-check", "--system", "maxwell-bloch", "--stepper", "heun"], &[], dir.path());
    let value: f64 = String::from_utf8(heun.stdout).unwrap().split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!(value > 1e-6);
}

#[test]
fn validate_config_names_the_offending_key() {
    let dir = tempfile::tempdir().unwrap();
    let good = r#"{"system": "pendulum", "sigma": [0.1], "stepper": "midpoint", "y0": [1, 2], "h": 0.1, "t_end": 1}"#;
    std::fs::write(dir.path().join("good.json"), good).unwrap();
    let out = spoisson(&["validate-config", "good.json"], &[], dir.path());
    assert!(out.status.success());
    let echoed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(echoed["n_paths"], 1);

    for (text, key) in [
        (good.replace("\"t_end\": 1", "\"t_end\": 1, \"seeed\": 4"), "seeed"),
        (good.replace("[0.1]", "[-0.1]"), "sigma[0]"),
        (good.replace("midpoint", "leapfrog"), "stepper"),
        (good.replace("[1, 2]", "[1, 2, 3]"), "y0"),
    ] {
        std::fs::write(dir.path().join("bad.json"), text).unwrap();
        let out = spoisson(&["validate-config", "bad.json"], &[], dir.path());
        assert!(!out.status.success());
        let err = stderr_json(&out);
        assert_eq!(err["error"], "config");
        assert_eq!(err["path"], key, "{err}");
    }
    let missing = spoisson(&["validate-config", "nope.json"], &[], dir.path());
    assert_eq!(stderr_json(&missing)["error"], "io");
}

#[test]
fn midpoint_on_a_noncanonical_system_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"system": "maxwell-bloch", "sigma": [0.1, 0.1], "stepper": "midpoint", "y0": [0.5, 0.8, 0.6], "h": 0.1, "t_end": 1}"#;
    std::fs::write(dir.path().join("c.json"), cfg).unwrap();
    let out = spoisson(&["simulate", "--config", "c.json"], &[], dir.path());
    assert!(!out.status.success());
    assert_eq!(stderr_json(&out)["path"], "stepper");
}

#[test]
fn output_directory_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"system": "harmonic", "sigma": [0.2], "stepper": "midpoint", "y0": [1, 0], "h": 0.1, "t_end": 1, "track": ["hamiltonian"]}"#;
    std::fs::write(dir.path().join("c.json"), cfg).unwrap();
    let env_dir = dir.path().join("from-env");
    let out = spoisson(&["simulate", "--config", "c.json"], &[("SPOISSON_OUTPUT_DIR", &env_dir)], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(env_dir.join("states_h0.1.csv").exists());
    assert!(env_dir.join("hamiltonian_h0.1.svg").exists());

    let out = spoisson(&["simulate", "--config", "c.json", "--out", "flag"], &[("SPOISSON_OUTPUT_DIR", &env_dir)], dir.path());
    assert!(out.status.success());
    assert!(dir.path().join("flag/manifest.json").exists());

    let out = spoisson(&["simulate", "--config", "c.json"], &[], dir.path());
    assert!(out.status.success());
    assert!(dir.path().join("spoisson-out/states_h0.1.csv").exists());
}

#[test]
fn order_and_scaling_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"system": "maxwell-bloch", "sigma": [0.5, 0.5], "stepper": "mb-splitting", "y0": [0.5, 0.8, 0.6],
                  "h": [0.1, 0.05, 0.025], "t_end": 1, "n_paths": 40}"#;
    std::fs::write(dir.path().join("c.json"), cfg).unwrap();
    let out = spoisson(&["order", "--config", "c.json", "--out", "o"], &[], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("o/order.csv")).unwrap();
    assert!(text.starts_with("h,mean_error,half_width,n_paths\n"));
    assert_eq!(text.lines().count(), 4);
    assert!(String::from_utf8(out.stdout).unwrap().contains("slope"));

    let out = spoisson(&["drift", "--scaling", "--config", "c.json", "--out", "s"], &[], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("s/scaling.csv").exists());

    let untracked = spoisson(&["drift", "--config", "c.json", "--out", "d"], &[], dir.path());
    assert_eq!(stderr_json(&untracked)["path"], "track");
}
