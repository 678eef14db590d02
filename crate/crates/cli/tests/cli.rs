//! End-to-end tests of the `mkpolar` binary: exit codes, determinism of
//! serialized output, and agreement with the library API.

use std::path::PathBuf;
use std::process::{Command, Output};

fn mkpolar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mkpolar"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("stdout is utf-8")
}

fn temp_path(name: &str) -> PathBuf {
    let mut path = std::env::temp_dir();
    path.push(format!("mkpolar-cli-test-{}-{name}", std::process::id()));
    path
}

#[test]
fn construct_writes_deterministic_spec_json() {
    let args = ["construct", "--kernels", "2,3", "--channel", "bec:0.5", "--K", "3"];
    let first = mkpolar(&args);
    let second = mkpolar(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout, "stdout must be byte-identical");
    let spec = mkpolar::construction::CodeSpec::from_json(&stdout(&first)).unwrap();
    assert_eq!(spec.n, 6);
    assert_eq!(spec.k, 3);
    assert_eq!(spec.information_set, vec![3, 5, 6]);
    assert_eq!(spec.kernels, vec!["T2", "T3"]);
    assert_eq!(spec.reliability_mode, "exact_erasure");
}

#[test]
fn construct_file_output_matches_stdout() {
    let path = temp_path("spec.json");
    let piped = mkpolar(&["construct", "--kernels", "T2,T3", "--channel", "bec:0.5", "--K", "3"]);
    let written = mkpolar(&[
        "construct",
        "--kernels",
        "2,3",
        "--channel",
        "bec:0.5",
        "--K",
        "3",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(written.status.success());
    let file = std::fs::read_to_string(&path).unwrap();
    assert_eq!(file, stdout(&piped));
    std::fs::remove_file(&path).ok();
}

#[test]
fn usage_errors_exit_2() {
    // Missing required arguments.
    assert_eq!(mkpolar(&["construct", "--kernels", "2"]).status.code(), Some(2));
    // Unknown kernel size.
    let bad_kernel = mkpolar(&["construct", "--kernels", "7", "--channel", "bec:0.5", "--K", "1"]);
    assert_eq!(bad_kernel.status.code(), Some(2));
    // Malformed channel.
    let bad_channel = mkpolar(&["construct", "--kernels", "2", "--channel", "foo:1", "--K", "1"]);
    assert_eq!(bad_channel.status.code(), Some(2));
    // Unknown verify suite.
    assert_eq!(mkpolar(&["verify", "--suite", "bogus"]).status.code(), Some(2));
    // Unknown subcommand.
    assert_eq!(mkpolar(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_1() {
    // K larger than N is a domain error, not a usage error.
    let output = mkpolar(&["construct", "--kernels", "2,2", "--channel", "bec:0.5", "--K", "9"]);
    assert_eq!(output.status.code(), Some(1));
    assert!(!output.stderr.is_empty());
    // Simulating a missing spec file fails at runtime.
    let missing = mkpolar(&[
        "simulate",
        "--spec",
        "/nonexistent/spec.json",
        "--channel",
        "bec:0.5",
        "--trials",
        "10",
    ]);
    assert_eq!(missing.status.code(), Some(1));
    // Polarize requires an erasure channel.
    let bsc = mkpolar(&["polarize", "--kernels", "2", "--channel", "bsc:0.1"]);
    assert_eq!(bsc.status.code(), Some(1));
}

#[test]
fn simulate_is_deterministic_and_seed_sensitive() {
    let path = temp_path("sim-spec.json");
    let constructed = mkpolar(&[
        "construct",
        "--kernels",
        "2,2",
        "--channel",
        "bec:0.5",
        "--K",
        "2",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(constructed.status.success());
    let base = [
        "simulate",
        "--spec",
        path.to_str().unwrap(),
        "--channel",
        "bec:0.3",
        "--trials",
        "500",
        "--seed",
        "1",
        "--csv",
    ];
    let first = mkpolar(&base);
    let second = mkpolar(&base);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    let rows: Vec<String> = stdout(&first).lines().map(String::from).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("code,channel,"));
    assert!(rows[1].starts_with("T2xT2 N=4 K=2,bec:0.3,500,1,"));
    let mut reseeded = base;
    reseeded[8] = "2";
    let third = mkpolar(&reseeded);
    assert_ne!(first.stdout, third.stdout);
    std::fs::remove_file(&path).ok();
}

#[test]
fn simulate_json_report_omits_wall_time() {
    let path = temp_path("sim-json-spec.json");
    assert!(mkpolar(&[
        "construct",
        "--kernels",
        "2",
        "--channel",
        "bec:0.5",
        "--K",
        "1",
        "--out",
        path.to_str().unwrap(),
    ])
    .status
    .success());
    let report_path = temp_path("report.json");
    let run = mkpolar(&[
        "simulate",
        "--spec",
        path.to_str().unwrap(),
        "--channel",
        "bec:0.2",
        "--trials",
        "100",
        "--seed",
        "3",
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert!(run.status.success());
    let text = std::fs::read_to_string(&report_path).unwrap();
    assert!(!text.contains("wall_time"), "wall time must not be serialized");
    assert_eq!(text, stdout(&run), "file and stdout reports must match");
    let report = mkpolar::sim::FerReport::from_json(&text).unwrap();
    assert_eq!(report.trials, 100);
    assert_eq!(report.seed, 3);
    std::fs::remove_file(&path).ok();
    std::fs::remove_file(&report_path).ok();
}

#[test]
fn polarize_csv_matches_library_golden() {
    let path = temp_path("leaves.csv");
    let run = mkpolar(&[
        "polarize",
        "--kernels",
        "2",
        "--channel",
        "bec:0.5",
        "--threshold",
        "0.1",
        "--csv",
        path.to_str().unwrap(),
    ]);
    assert!(run.status.success());
    let csv = std::fs::read_to_string(&path).unwrap();
    let expected = format!(
        "index,path,erasure_prob,mutual_info,log2_z\n1,1,0.75,0.25,{}\n2,2,0.25,0.75,-2\n",
        0.75f64.log2()
    );
    assert_eq!(csv, expected);
    std::fs::remove_file(&path).ok();
}

#[test]
fn exponent_prints_full_precision_combined_value() {
    let run = mkpolar(&["exponent", "--profile", "2:0.5,3:0.5"]);
    assert!(run.status.success());
    assert!(stdout(&run).contains("combined exponent: 0.45132827510696516"));
}

#[test]
fn analyze_kernel_reads_matrix_files() {
    let path = temp_path("kernel.txt");
    std::fs::write(&path, "111\n101\n011\n").unwrap();
    let run = mkpolar(&["analyze-kernel", "--file", path.to_str().unwrap()]);
    assert!(run.status.success());
    let text = stdout(&run);
    assert!(text.contains("partial distances:     [1, 2, 2]"));
    assert!(text.contains("accepted:              true"));
    assert!(text.contains("0.42061983571430495"));
    std::fs::remove_file(&path).ok();

    // A singular matrix is reported, not an error.
    let bad = temp_path("singular.txt");
    std::fs::write(&bad, "11\n11\n").unwrap();
    let run = mkpolar(&["analyze-kernel", "--file", bad.to_str().unwrap()]);
    assert!(run.status.success());
    let text = stdout(&run);
    assert!(text.contains("invertible:            false"));
    assert!(text.contains("kernel rejected"));
    std::fs::remove_file(&bad).ok();
}

#[test]
fn verify_single_suite_passes() {
    let run = mkpolar(&["verify", "--suite", "entropy"]);
    assert!(run.status.success());
    let text = stdout(&run);
    assert!(text.contains("PASS entropy/self-convolution-lower-bound"));
    assert!(text.contains("0 failures"));
}
