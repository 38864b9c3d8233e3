use std::path::PathBuf;
use std::process::{Command, Output};

fn mcf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcf")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_str(stdout(out).trim()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("mcf-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn expands_three_sevenths() {
    let out = mcf(&["expand", "--x", "3/7"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["digits"], serde_json::json!([1, 2, 1]));
    assert_eq!(v["terminated"], true);
}

#[test]
fn eval_inverts_expand() {
    let out = mcf(&["eval", "--digits", "1,2,1"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("3/7"));
}

#[test]
fn cdf_at_one_is_one() {
    for m in ["2", "3", "7"] {
        let v = json(&mcf(&["--m", m, "measure", "cdf", "--x", "1"]));
        assert!((v["cdf"].as_f64().unwrap() - 1.0).abs() < 1e-15);
    }
}

#[test]
fn cdf_matches_closed_form() {
    let v = json(&mcf(&["measure", "cdf", "--x", "0.5"]));
    let want = (2.0f64 * 1.5 / 2.5).ln() / (4.0f64 / 3.0).ln();
    assert!((v["cdf"].as_f64().unwrap() - want).abs() < 1e-15);
}

#[test]
fn domain_errors_exit_one_with_json() {
    let out = mcf(&["expand", "--x", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["error"]["kind"], "domain");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(mcf(&["bogus"]).status.code(), Some(2));
    assert_eq!(mcf(&["--m", "1", "expand", "--x", "1/2"]).status.code(), Some(2));
}

#[test]
fn simulation_is_reproducible() {
    let a = mcf(&["--seed", "42", "simulate", "--steps", "500"]);
    let b = mcf(&["--seed", "42", "simulate", "--steps", "500"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = Command::new(env!("CARGO_BIN_EXE_mcf"))
        .args(["--seed", "42", "simulate", "--steps", "500"])
        .env("MCF_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(a.stdout, c.stdout);
    assert!(stdout(&a).starts_with("step,digit,state\n"));
}

#[test]
fn pf_apply_writes_grid_and_sidecar() {
    let input = scratch("ones.csv");
    let output = scratch("image.csv");
    std::fs::write(&input, "0,1\n0.25,1\n0.5,1\n0.75,1\n1,1\n").unwrap();
    let out = mcf(&["pf", "apply", "--input", input.to_str().unwrap(), "--output", output.to_str().unwrap()]);
    assert!(out.status.success());
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(output.with_extension("json")).unwrap()).unwrap();
    assert_eq!(sidecar["interpolation"], "linear");
    assert_eq!(sidecar["max_branch"], 40);
    let bound = sidecar["tail_bound"].as_f64().unwrap();
    let text = std::fs::read_to_string(&output).unwrap();
    for line in text.lines().skip(1) {
        let value: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((value - 1.0).abs() <= bound + 1e-15);
    }

    // feeding the image back reads its sidecar
    let again = scratch("image2.csv");
    let out = mcf(&["pf", "iterate", "--input", output.to_str().unwrap(), "--n", "2", "--output", again.to_str().unwrap()]);
    assert!(out.status.success());
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(again.with_extension("json")).unwrap()).unwrap();
    assert_eq!(sidecar["iterations"], 2);
}

#[test]
fn gk_reports_a_decay_rate() {
    let v = json(&mcf(&["gk", "--n", "6", "--x-grid", "1025"]));
    let q = v["fitted_rate"].as_f64().unwrap();
    assert!(q > 0.1 && q < 0.3, "{q}");
    assert_eq!(v["errors"].as_array().unwrap().len(), 6);
}

#[test]
fn selftest_passes() {
    let out = mcf(&["selftest"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
}
