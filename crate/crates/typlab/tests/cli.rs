use std::process::{Command, Output};

use serde_json::Value;
use typlab::record::csv_body;

fn typlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_typlab"))
        .args(args)
        .env_remove("TYPLAB_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> Value {
    let mut full = args.to_vec();
    full.extend(["--format", "json"]);
    serde_json::from_str(&stdout(&typlab(&full))).unwrap()
}

/// Small configurations of every experiment, with Monte Carlo enabled where
/// the experiment supports it.
const SMALL_RUNS: &[&[&str]] = &[
    &["scaling", "--dims", "2,4,8,16", "--mode", "both", "--samples", "20000"],
    &["dichotomy", "--dims", "4,8", "--mode", "both", "--samples", "20000"],
    &["bound", "--cells", "200", "--dims", "2,3,5,8"],
    &["decompose", "--dims", "4,6", "--samples", "20000"],
    &["dynamics", "--dims", "4,8", "--instances", "2", "--n-times", "20"],
];

#[test]
fn dichotomy_reports_both_witnesses() {
    let v = json(&["dichotomy"]);
    let cells = v["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 2);
    assert_eq!(cells[0]["witness"], "diagonal");
    assert_eq!(cells[0]["var_conditional_expectation"].as_f64().unwrap(), 0.0);
    assert!((cells[1]["var_conditional_expectation"].as_f64().unwrap() - 0.65625).abs() < 1e-9);
    for c in cells {
        assert!((c["reimann_bound"].as_f64().unwrap() - 6.125).abs() < 1e-9);
    }
    assert!(v["failures"].as_array().unwrap().is_empty());
}

#[test]
fn usage_and_config_errors_exit_with_one() {
    let cases: &[&[&str]] = &[
        &["nonsense"],
        &["scaling", "--observable", "bogus"],
        &["scaling", "--ensemble", "gmc:1,-1"],
        &["scaling", "--dims", "0"],
        &["scaling", "--config", "/nonexistent/typlab.toml"],
        &["dichotomy", "--observable", "fourier-linear", "--observable", "projector:0"],
        &["dichotomy", "--observable", "fourier-linear"],
        &["bound", "--ensemble", "haar"],
        &["scaling", "--dims", "4", "--ensemble", "gmc:0.5,0.5"],
    ];
    for args in cases {
        let out = typlab(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "dims = [4]\nsamples = 10\n").unwrap();
    let out = typlab(&["scaling", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_file_values_apply_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    let out_path = dir.path().join("out.json");
    std::fs::write(
        &path,
        format!(
            "dims = [4, 8]\nobservables = [\"fourier-linear\"]\nseed = 5\n\n[output]\npath = {:?}\nformat = \"json\"\n",
            out_path.to_str().unwrap()
        ),
    )
    .unwrap();
    let run = typlab(&["scaling", "--config", path.to_str().unwrap(), "--dims", "2,4,8"]);
    assert!(run.status.success());
    assert!(run.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(v["config"]["dims"], serde_json::json!([2, 4, 8]));
    assert_eq!(v["config"]["seed"]["seed"], 5);
    assert_eq!(v["cells"].as_array().unwrap().len(), 3);
}

#[test]
fn csv_bodies_and_json_numbers_are_identical_across_worker_counts() {
    for args in SMALL_RUNS {
        let run = |workers: &str, format: &str| {
            let mut full = args.to_vec();
            full.extend(["--workers", workers, "--format", format]);
            stdout(&typlab(&full))
        };
        let csv1 = csv_body(&run("1", "csv"));
        assert!(!csv1.is_empty());
        let strip = |s: String| {
            let mut v: Value = serde_json::from_str(&s).unwrap();
            v.as_object_mut().unwrap().remove("metadata");
            v
        };
        let json1 = strip(run("1", "json"));
        for workers in ["4", "8"] {
            assert_eq!(csv_body(&run(workers, "csv")), csv1, "{args:?} workers={workers}");
            assert_eq!(strip(run(workers, "json")), json1, "{args:?} workers={workers}");
        }
        assert_eq!(csv_body(&run("1", "csv")), csv1, "{args:?} rerun");
    }
}

#[test]
fn environment_seed_is_a_default_that_the_flag_overrides() {
    let base = ["scaling", "--dims", "4", "--mode", "mc", "--samples", "5000", "--format", "csv"];
    let run = |env: Option<&str>, extra: &[&str]| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_typlab"));
        cmd.args(base).args(extra).env_remove("TYPLAB_SEED");
        if let Some(s) = env {
            cmd.env("TYPLAB_SEED", s);
        }
        csv_body(&stdout(&cmd.output().unwrap()))
    };
    let flag7 = run(None, &["--seed", "7"]);
    assert_eq!(run(Some("7"), &[]), flag7);
    assert_eq!(run(Some("3"), &["--seed", "7"]), flag7);
    assert_ne!(run(Some("3"), &[]), flag7);
    assert_eq!(run(None, &[]), run(None, &["--seed", "0"]));

    let mut bad = Command::new(env!("CARGO_BIN_EXE_typlab"));
    bad.args(base).env("TYPLAB_SEED", "not-a-number");
    assert_eq!(bad.output().unwrap().status.code(), Some(1));
}

#[test]
fn zero_over_zero_ratios_print_a_sentinel() {
    let v = json(&["scaling", "--dims", "4", "--observable", "identity"]);
    let cell = &v["cells"][0];
    assert_eq!(cell["reimann_bound"].as_f64().unwrap(), 0.0);
    assert_eq!(cell["ratio_to_bound"], "undefined");
    assert_eq!(cell["ratio_to_range_sq"], "undefined");

    let csv = stdout(&typlab(&["scaling", "--dims", "4", "--observable", "identity", "--format", "csv"]));
    let body = csv_body(&csv);
    let mut lines = body.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "ratio_to_bound").unwrap();
    assert_eq!(row[col], "undefined");
}

#[test]
fn csv_preamble_carries_metadata() {
    let csv = stdout(&typlab(&["bound", "--cells", "10", "--workers", "2", "--format", "csv"]));
    for key in ["# typlab ", "# rng_algorithm: ", "# config_hash: ", "# workers: 2", "# summary.violations: 0"] {
        assert!(csv.lines().any(|l| l.starts_with(key)), "missing {key}");
    }
}
