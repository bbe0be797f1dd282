//! Behavior of the `css-lab` binary: exit codes, emitted files and
//! output determinism on a small configuration.

use std::path::{Path, PathBuf};
use std::process::Command;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_css-lab"))
}

fn temp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("cssl_cli_test").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.cfg");
    std::fs::write(&path, body).unwrap();
    path
}

const SMALL: &str = "n = 32\nbox_length = 40\ndt = 1e-3\nt_end = 0.05\ncheckpoint_stride = 25\n";

#[test]
fn run_emits_artifacts_and_exits_zero() {
    let dir = temp_dir("run");
    let cfg = write_config(&dir, SMALL);
    let out = dir.join("out");
    let status = binary()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .env("CSS_LAB_THREADS", "1")
        .output()
        .unwrap();
    assert!(
        status.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&status.stderr)
    );
    assert!(out.join("diagnostics.csv").is_file());
    assert!(out.join("summary.json").is_file());
    let checkpoints = std::fs::read_dir(&out)
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .file_name()
                .to_string_lossy()
                .ends_with(".cssl")
        })
        .count();
    assert_eq!(checkpoints, 3); // t = 0, 0.025, 0.05
}

#[test]
fn repeated_runs_are_bitwise_identical() {
    let dir = temp_dir("determinism");
    let cfg = write_config(&dir, SMALL);
    let csv = |name: &str| -> Vec<u8> {
        let out = dir.join(name);
        let status = binary()
            .args(["run", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .env("CSS_LAB_THREADS", "1")
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(out.join("diagnostics.csv")).unwrap()
    };
    assert_eq!(csv("a"), csv("b"));
}

#[test]
fn thread_count_does_not_change_results() {
    // Rows are transformed into disjoint slices and reductions stay
    // sequential, so the parallel path must reproduce the single-thread
    // CSV bitwise.
    let dir = temp_dir("threads");
    let cfg = write_config(&dir, SMALL);
    let csv = |threads: &str| -> Vec<u8> {
        let out = dir.join(format!("t{threads}"));
        let status = binary()
            .args(["run", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .env("CSS_LAB_THREADS", threads)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(out.join("diagnostics.csv")).unwrap()
    };
    assert_eq!(csv("1"), csv("4"));
}

#[test]
fn config_errors_exit_two() {
    let dir = temp_dir("config_error");
    let cfg = write_config(&dir, "n = 100\n");
    let out = binary()
        .args(["run", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("'n'"), "stderr should name the key: {stderr}");

    let missing = binary()
        .args(["run", "--config", "/nonexistent/path.cfg"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn unknown_subcommand_exits_two() {
    let out = binary().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reports_without_artifacts_exit_two() {
    let dir = temp_dir("no_artifacts");
    let out = binary()
        .args(["decay-report", "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reports_run_on_existing_artifacts() {
    let dir = temp_dir("reports");
    // Enough checkpoints past t = 1 for the fits. The grid must resolve
    // the datum's spectrum or the truncation ringing contaminates the
    // profile's boundary strip and the growth fit rejects every record.
    let cfg = write_config(
        &dir,
        "n = 64\nbox_length = 40\ndt = 1e-2\nt_end = 10\ncheckpoint_stride = 25\n",
    );
    let out = dir.join("out");
    let status = binary()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .env("CSS_LAB_THREADS", "1")
        .status()
        .unwrap();
    assert!(status.success());

    let decay = binary()
        .args(["decay-report", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(
        decay.status.success(),
        "decay-report failed: {}{}",
        String::from_utf8_lossy(&decay.stdout),
        String::from_utf8_lossy(&decay.stderr)
    );
    assert!(out.join("decay_report.json").is_file());

    let scattering = binary()
        .args(["scattering-report", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(
        scattering.status.success(),
        "scattering-report failed: {}{}",
        String::from_utf8_lossy(&scattering.stdout),
        String::from_utf8_lossy(&scattering.stderr)
    );
    assert!(out.join("scattering_report.json").is_file());
}

#[test]
fn plane_wave_run_reports_exact_error() {
    let dir = temp_dir("planewave");
    let cfg = write_config(
        &dir,
        "n = 32\nbox_length = 40\ndt = 1e-3\nt_end = 0.1\ndata = plane_wave\namplitude = 0.1\nmomentum_x = 3\ncheckpoint_stride = 50\n",
    );
    let out = binary()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .env("CSS_LAB_THREADS", "1")
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.contains("plane-wave exact-solution relative L2 error"),
        "stdout: {stdout}"
    );
    let summary = std::fs::read_to_string(dir.join("out/summary.json")).unwrap();
    assert!(summary.contains("plane_wave_exact_rel_l2_error"));
}
