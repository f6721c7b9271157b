use catsize::cli::{run, Outcome};
use serde_json::Value;
use std::process::Command;

fn cli(args: &str) -> Outcome {
    run(std::iter::once("catsize").chain(args.split_whitespace()))
}

fn envelope(out: &Outcome) -> Value {
    assert_eq!(out.code, 0, "stderr: {}", out.stderr);
    serde_json::from_str(&out.stdout).expect("stdout is JSON")
}

fn schema() -> jsonschema::Validator {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../schema/envelope.schema.json")).unwrap();
    jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).unwrap()
}

fn without_timing(stdout: &str) -> String {
    stdout
        .lines()
        .filter(|l| !l.trim_start().starts_with("\"timing_ms\""))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn branch_dist_example() {
    let env = envelope(&cli("measure branch-dist --modes 10 --alpha 0.5 --delta 0.01"));
    assert_eq!(env["results"]["value"], 2.5);
    assert_eq!(env["results"]["diagnostics"]["n_eff"], 4);
    assert_eq!(env["checks"][0]["status"], "pass");
}

#[test]
fn marquardt_example() {
    let env = envelope(&cli("measure marquardt --modes 4 --alpha 1"));
    assert_eq!(env["results"]["value"], 4.0);
}

#[test]
fn complex_alpha_is_accepted() {
    let env = envelope(&cli("measure branch-dist-real --modes 3 --alpha 0.3,-0.4 --delta 0.01"));
    assert_eq!(env["inputs"]["alpha"], serde_json::json!([0.3, -0.4]));
}

#[test]
fn delta_outside_interval_exits_3_with_interval() {
    let out = cli("measure branch-dist --modes 2 --alpha 1 --delta 0.2");
    assert_eq!(out.code, 3);
    assert!(out.stderr.contains("[8.39e-5, 4.60e-3]"), "{}", out.stderr);
    assert!(out.stdout.is_empty());
}

#[test]
fn invalid_flags_exit_2() {
    assert_eq!(cli("simulate distill --modes 5 --alpha 0.8 --trials 0").code, 2);
    assert_eq!(cli("measure branch-dist --modes 2 --alpha 1").code, 2);
    assert_eq!(cli("measure branch-dist --modes 2 --alpha x --delta 0.01").code, 2);
    assert_eq!(cli("measure bogus --alpha 1").code, 2);
    assert_eq!(cli("wigner --state even-cat --alpha 1 --grid 1:2").code, 2);
    assert_eq!(cli("--threads 0 verify").code, 2);
}

#[test]
fn oversized_grid_exits_4() {
    assert_eq!(cli("wigner --state even-cat --alpha 1 --grid -1:1:5000").code, 4);
}

#[test]
fn unwritable_output_exits_5() {
    let out = cli("wigner --state even-cat --alpha 1 --grid -1:1:11 --out /nonexistent-dir/w.csv");
    assert_eq!(out.code, 5, "{}", out.stderr);
}

#[test]
fn coarse_grid_features_exit_3() {
    assert_eq!(cli("wigner --state even-cat --alpha 2 --grid -1:1:3 --features").code, 3);
}

#[test]
fn even_cat_fringe_wavelength() {
    let env = envelope(&cli("wigner --state even-cat --alpha 2 --grid -4:4:161 --features"));
    let wl = env["results"]["features"]["fringe_wavelength"]["wavelength"].as_f64().unwrap();
    assert!((wl / (std::f64::consts::PI / 4.0) - 1.0).abs() < 0.05, "{wl}");
}

#[test]
fn hcs2_slice_file_and_origin_peak() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("slice.csv");
    let args = format!(
        "wigner --state hcs2 --alpha 3 --slice gamma2=0 --grid -5:5:201 --out {} --features",
        path.display()
    );
    let env = envelope(&cli(&args));
    let f = &env["results"]["features"];
    assert_eq!(f["peak_locations"][0], serde_json::json!([[0.0, 0.0]]));
    let v: Vec<f64> = f["peak_values"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!(v[0].abs() > v[1].abs());
    let csv = std::fs::read_to_string(&path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("re,im,w"));
    assert_eq!(lines.count(), 201 * 201);
}

#[test]
fn json_grid_export() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.json");
    let args = format!(
        "wigner --state omega --modes 2 --alpha 1 --grid -2:2:9 --format json --out {}",
        path.display()
    );
    envelope(&cli(&args));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["axes"], serde_json::json!(["re1", "im1", "re2", "im2"]));
    assert_eq!(doc["values"].as_array().unwrap().len(), 81);
    assert!(doc["convention"].as_str().unwrap().contains("2/pi"));
}

#[test]
fn collapse_cat_vs_branch_example() {
    let env = envelope(&cli(
        "simulate collapse --alpha 3.1622 --problem cat-vs-branch --trials 200000 --seed 1",
    ));
    let r = &env["results"]["reported"];
    let (mean, se) = (r["mean"].as_f64().unwrap(), r["std_error"].as_f64().unwrap());
    assert!((mean - (0.5 + 0.5 / 2f64.sqrt())).abs() < 3.0 * se, "{mean} {se}");
}

#[test]
fn distill_simulation_example() {
    let env = envelope(&cli("simulate distill --modes 5 --alpha 0.8 --trials 100000 --seed 7"));
    assert!(env["checks"].as_array().unwrap().iter().all(|c| c["status"] == "pass"));
}

#[test]
fn simulate_output_is_deterministic_across_runs_and_threads() {
    for args in [
        "simulate distill --modes 5 --alpha 0.8 --trials 20000 --seed 7",
        "simulate mode-loss --modes 6 --alpha 1 --lambda 0.25 --trials 20000 --seed 3",
        "simulate collapse --alpha 2 --problem branch-vs-branch --trials 20000 --seed 11",
    ] {
        let a = cli(args);
        let b = cli(args);
        let c = cli(&format!("--threads 1 {args}"));
        let d = cli(&format!("--threads 3 {args}"));
        assert_eq!(without_timing(&a.stdout), without_timing(&b.stdout));
        // the echoed command differs by the --threads flag only
        let strip = |s: &str| without_timing(s).replace("--threads 1 ", "").replace("--threads 3 ", "");
        assert_eq!(strip(&a.stdout), strip(&c.stdout));
        assert_eq!(strip(&c.stdout), strip(&d.stdout));
    }
}

#[test]
fn every_command_validates_against_schema() {
    let v = schema();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w.csv");
    for args in [
        "measure branch-dist --modes 10 --alpha 0.5 --delta 0.01".to_string(),
        "measure branch-dist-real --modes 2 --alpha 1 --delta 0.001".to_string(),
        "measure rqfi --modes 2 --alpha 1 --family bounded-local,quadrature".to_string(),
        "measure marquardt --modes 2 --alpha 1".to_string(),
        "measure distill --modes 5 --alpha 0.8".to_string(),
        "measure mode-loss --modes 6 --alpha 1 --lambda 0.25".to_string(),
        "measure wigner-empirical --state even-cat --alpha 2".to_string(),
        "simulate distill --modes 3 --alpha 1 --trials 1000".to_string(),
        "simulate mode-loss --modes 3 --alpha 1 --lambda 0.5 --trials 1000".to_string(),
        "simulate collapse --alpha 1.5 --problem cat-vs-mixed --trials 1000".to_string(),
        format!("wigner --state odd-cat --alpha 1 --grid -3:3:61 --features --out {}", out.display()),
    ] {
        let env = envelope(&cli(&args));
        let errors: Vec<String> = v.iter_errors(&env).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{args}: {errors:?}");
    }
}

#[test]
fn numbers_round_trip() {
    let env = envelope(&cli("measure branch-dist-real --modes 1 --alpha 2 --state even-cat --delta 0.01"));
    let v = env["results"]["value"].as_f64().unwrap();
    let st = catsize::closed::CatStateSpec::new(catsize::closed::StateFamily::EvenCat, 1, num_complex::Complex64::new(2.0, 0.0)).unwrap();
    assert_eq!(v.to_bits(), catsize::measures::branch_dist_size_real(&st, 0.01).unwrap().value.to_bits());
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_catsize");
    let status = |args: &[&str]| Command::new(bin).args(args).output().unwrap();
    let ok = status(&["measure", "marquardt", "--modes", "4", "--alpha", "1"]);
    assert_eq!(ok.status.code(), Some(0));
    let env: Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(env["results"]["value"], 4.0);
    let bad = status(&["measure", "branch-dist", "--modes", "2", "--alpha", "1", "--delta", "0.2"]);
    assert_eq!(bad.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("4.60e-3"));
    assert_eq!(status(&["simulate", "distill", "--alpha", "1", "--trials", "0"]).status.code(), Some(2));
}
