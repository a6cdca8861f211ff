//! End-to-end checks of the `fris` binary.

use std::path::Path;
use std::process::Command;

fn fris() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fris"))
}

fn small_scenario(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("scenario.toml");
    std::fs::write(
        &path,
        r#"
m_y = 2
m_z = 2
n_t = 2
num_ues = 2
ue_weights = [0.5, 0.5]
trunc_len = 4
seeds = [0, 1]

[pattern_fit]
trunc_lens = [4, 9]
n_theta = 16
n_phi = 32

[power_analysis]
num_instances = 10
grid_points = 64

[sweep]
m_values = [4]
nt_values = [2]
i_values = [4]

[tolerances]
max_outer = 4
rcg_max_iters = 30
"#,
    )
    .unwrap();
    path
}

#[test]
fn fit_pattern_writes_expected_files() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_scenario(dir.path());
    let out = dir.path().join("fit");
    let status = fris()
        .args(["fit-pattern", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("nmse.csv").exists());
    assert!(out.join("pattern_i4.csv").exists());
    assert!(out.join("pattern_i9.csv").exists());
    assert!(out.join("manifest.json").exists());
    let nmse = std::fs::read_to_string(out.join("nmse.csv")).unwrap();
    assert_eq!(nmse.lines().count(), 3, "header plus one row per length");
}

#[test]
fn sweep_and_solve_produce_csv_tables() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_scenario(dir.path());
    let out = dir.path().join("sweep");
    let status = fris()
        .args(["sweep", "--axis", "m", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .args(["--threads", "2"])
        .status()
        .unwrap();
    assert!(status.success());
    let sweep = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    // 1 value x 4 schemes x 2 seeds plus the header.
    assert_eq!(sweep.lines().count(), 9);
    assert!(out.join("medians.csv").exists());

    let out = dir.path().join("solve");
    let status = fris()
        .args(["solve", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .args(["--seeds", "1"])
        .status()
        .unwrap();
    assert!(status.success());
    for file in [
        "results.csv",
        "rate_traces.csv",
        "rcg_trace.csv",
        "paths.csv",
        "manifest.json",
    ] {
        assert!(out.join(file).exists(), "{file} missing");
    }
}

#[test]
fn export_pattern_validates_the_element_index() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_scenario(dir.path());
    let out = dir.path().join("export");
    let status = fris()
        .args(["export-pattern", "--element", "99", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(!status.success(), "out-of-range element must fail");

    let status = fris()
        .args([
            "export-pattern",
            "--element",
            "1",
            "--grid-theta",
            "8",
            "--grid-phi",
            "16",
            "--config",
        ])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let grid = std::fs::read_to_string(out.join("element_1_pattern.csv")).unwrap();
    assert_eq!(grid.lines().count(), 8 * 16 + 1);
}

#[test]
fn bad_config_fails_with_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "ue_weights = [0.9, 0.9, 0.9]\n").unwrap();
    let output = fris()
        .args(["solve", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("weights"),
        "diagnostic should mention the weights: {stderr}"
    );
}
