//! End-to-end tests against the built binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn nmfft(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nmfft"))
        .args(args)
        .env_remove("NMFFT_SPEC")
        .output()
        .expect("binary runs")
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn data_file(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/data")
        .join(name)
}

#[test]
fn estimate_prints_the_full_execution_time_table() {
    let output = nmfft(&["estimate"]);
    assert!(output.status.success());
    let text = stdout_of(&output);
    for cell in [
        "0.033 s", "0.017 s", "0.05 s", "0.0016 s", "0.13 s", "0.067 s", "0.20 s", "0.0063 s",
        "0.53 s", "0.27 s", "0.80 s", "0.025 s", "2.1 s", "1.1 s", "3.2 s", "0.10 s",
    ] {
        assert!(text.contains(cell), "missing `{cell}` in\n{text}");
    }
    assert!(text.contains("32 HBM2 channels"));
}

#[test]
fn estimate_csv_is_deterministic() {
    let one = nmfft(&["estimate", "--format", "csv", "--sizes", "4k,8k", "--configs", "ddr4-1"]);
    let two = nmfft(&["estimate", "--format", "csv", "--sizes", "4k,8k", "--configs", "ddr4-1"]);
    assert!(one.status.success());
    assert_eq!(one.stdout, two.stdout);
    let text = stdout_of(&one);
    assert!(text.starts_with("size,config,bandwidth_gib_s,time_s,bottleneck,min_accelerators"));
    assert!(text.contains("4k,ddr4-1,15,0.033,bandwidth"));
}

#[test]
fn fft2d_verify_reports_error_within_tolerance() {
    let output = nmfft(&["fft2d", "--size", "64", "--k", "4", "--verify", "--seed", "7"]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let text = stdout_of(&output);
    assert!(text.contains("max rel err"), "{text}");
    assert!(text.contains("tol 1.0e-4"));
    assert!(text.contains("total traffic: 131072 B"));
}

#[test]
fn fft2d_file_backend_round_trips_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("spectrum.c64");
    let output = nmfft(&[
        "fft2d",
        "--size",
        "128",
        "--k",
        "8",
        "--backend",
        "file",
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "3",
        "--verify",
    ]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    assert_eq!(std::fs::metadata(&out).unwrap().len(), 128 * 128 * 8);
    let sidecar = std::fs::read_to_string(dir.path().join("spectrum.c64.desc")).unwrap();
    assert_eq!(sidecar, "n=128\nelement=c64le\n");
}

#[test]
fn gen_grid_is_seed_deterministic_and_feeds_fft2d() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.c64");
    let b = dir.path().join("b.c64");
    assert!(nmfft(&["gen-grid", "--size", "64", "--out", a.to_str().unwrap(), "--seed", "11"])
        .status
        .success());
    assert!(nmfft(&["gen-grid", "--size", "64", "--out", b.to_str().unwrap(), "--seed", "11"])
        .status
        .success());
    let bytes_a = std::fs::read(&a).unwrap();
    let bytes_b = std::fs::read(&b).unwrap();
    assert_eq!(bytes_a.len(), 64 * 64 * 8);
    assert_eq!(bytes_a, bytes_b);

    // Side length comes from the sidecar when --size is omitted.
    let output = nmfft(&["fft2d", "--in", a.to_str().unwrap(), "--verify"]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
}

#[test]
fn pipeline_reports_makespan_against_closed_form() {
    let output = nmfft(&["pipeline", "--size", "4k", "--config", "ddr4-1", "--accelerators", "7"]);
    assert!(output.status.success());
    let text = stdout_of(&output);
    assert!(text.contains("blocks scheduled: 2048"));
    assert!(text.contains("closed-form estimate: 0.033333 s"));
    assert!(text.contains("simulated makespan:"));
    assert!(text.contains("bottleneck: bandwidth"));
}

#[test]
fn cpi_classifies_the_calibration_kernels() {
    let input = data_file("microbench_counters.csv");
    let output = nmfft(&["cpi", "--in", input.to_str().unwrap()]);
    assert!(output.status.success());
    let text = stdout_of(&output);
    let mac_line = text.lines().find(|l| l.starts_with("mac")).unwrap();
    assert!(mac_line.ends_with("compute_bound"));
    let sgemm_line = text.lines().find(|l| l.starts_with("sgemm")).unwrap();
    assert!(sgemm_line.ends_with("compute_bound"));
    let stream_line = text.lines().find(|l| l.starts_with("stream-add")).unwrap();
    assert!(stream_line.ends_with("memory_bound"));
}

#[test]
fn cpi_rejects_malformed_dumps_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "kernel,counter,value\nmac,PM_RUN_CYC,abc\n").unwrap();
    let output = nmfft(&["cpi", "--in", path.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1));
    let err = String::from_utf8_lossy(&output.stderr);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn roofline_emits_csv_and_svg() {
    let csv = nmfft(&[
        "roofline",
        "--machine",
        "ad9h7",
        "--config",
        "hbm2-32",
        "--convention",
        "gflop-per-gib",
        "--format",
        "csv",
    ]);
    assert!(csv.status.success());
    let text = stdout_of(&csv);
    assert!(text.starts_with("kernel,ai,perf_tflops,bound"));
    assert!(text.contains("fft-16k,18.7905,1.5032,compute"));

    let svg = nmfft(&[
        "roofline",
        "--machine",
        "power9",
        "--points",
        "/dev/null",
        "--config",
        "ddr4-1",
        "--format",
        "svg",
    ]);
    assert!(svg.status.success());
    assert!(stdout_of(&svg).starts_with("<svg"));
}

#[test]
fn amdahl_prints_share_and_limit() {
    let output = nmfft(&[
        "amdahl",
        "--times",
        "fft=47,gridder=30,degridder=23",
        "--accelerated",
        "fft",
        "--new-time",
        "0",
    ]);
    assert!(output.status.success());
    let text = stdout_of(&output);
    assert!(text.contains("47.00%"));
    assert!(text.contains("1.8868x"));
}

#[test]
fn custom_catalogue_via_flag() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tiny.toml");
    std::fs::write(
        &path,
        r#"
[[nmc]]
name = "lab"
memory = "ddr4_dimm"
channels = 1
bw_per_channel_gib = 8.0
"#,
    )
    .unwrap();
    let output = nmfft(&[
        "estimate",
        "--spec",
        path.to_str().unwrap(),
        "--sizes",
        "4k",
        "--configs",
        "lab",
        "--format",
        "csv",
    ]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    assert!(stdout_of(&output).contains("4k,lab,8,0.063,bandwidth"));

    // Same catalogue through the environment variable.
    let via_env = Command::new(env!("CARGO_BIN_EXE_nmfft"))
        .args(["estimate", "--sizes", "4k", "--configs", "lab", "--format", "csv"])
        .env("NMFFT_SPEC", &path)
        .output()
        .unwrap();
    assert!(via_env.status.success());
    assert_eq!(via_env.stdout, output.stdout);
}

#[test]
fn usage_errors_exit_with_code_two() {
    let unknown_sub = nmfft(&["transmogrify"]);
    assert_eq!(unknown_sub.status.code(), Some(2));
    let unknown_flag = nmfft(&["estimate", "--bogus"]);
    assert_eq!(unknown_flag.status.code(), Some(2));
}

#[test]
fn module_errors_exit_with_code_one() {
    let output = nmfft(&["fft2d", "--size", "48", "--k", "4"]);
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("power of two"));

    let output = nmfft(&["estimate", "--configs", "nonexistent"]);
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("nonexistent"));
}
