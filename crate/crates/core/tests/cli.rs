//! End-to-end checks of the `degenfd` binary: subcommands, exit codes, and
//! the byte format of deterministic CSV reports.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_degenfd"))
}

fn tmp_path(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("degenfd-cli-{}-{name}", std::process::id()));
    p
}

fn write_config(name: &str, text: &str) -> PathBuf {
    let path = tmp_path(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn presets_lists_the_catalog() {
    let out = bin().arg("presets").output().unwrap();
    assert!(out.status.success());
    let text = stdout_of(&out);
    let names: Vec<&str> = text.lines().map(str::trim).collect();
    for expected in [
        "freeflow",
        "decay",
        "heat1d-sym",
        "drift-upwind",
        "aniso2d",
        "degenerate-ode",
        "skew",
    ] {
        assert!(names.contains(&expected), "missing preset {expected}");
    }
}

#[test]
fn study_deterministic_csv_is_byte_stable() {
    let cfg = write_config(
        "det.cfg",
        "[problem]\npreset = freeflow\n\n[study]\nlevels = 2\n",
    );
    let run = || {
        let out = bin()
            .args(["study", "--config"])
            .arg(&cfg)
            .args(["--format", "csv", "--deterministic"])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        stdout_of(&out)
    };
    let a = run();
    let b = run();
    assert_eq!(a, b, "deterministic runs differ");
    assert!(a.starts_with("h,error_sup,observed_order\n"), "{a}");
    assert!(!a.contains("wall_ms"));
    assert!(a.ends_with('\n'));
    std::fs::remove_file(cfg).ok();
}

#[test]
fn study_csv_carries_wall_times_by_default() {
    let cfg = write_config(
        "wall.cfg",
        "[problem]\npreset = freeflow\n\n[study]\nlevels = 2\n",
    );
    let out = bin()
        .args(["study", "--config"])
        .arg(&cfg)
        .args(["--format", "csv"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(stdout_of(&out).starts_with("h,error_sup,observed_order,wall_ms\n"));
    std::fs::remove_file(cfg).ok();
}

#[test]
fn out_flag_writes_the_report_file() {
    let cfg = write_config(
        "outfile.cfg",
        "[problem]\npreset = freeflow\n\n[study]\nlevels = 2\n",
    );
    let dest = tmp_path("report.csv");
    let out = bin()
        .args(["study", "--config"])
        .arg(&cfg)
        .args(["--format", "csv", "--deterministic", "--out"])
        .arg(&dest)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(stdout_of(&out).is_empty());
    let written = std::fs::read_to_string(&dest).unwrap();
    assert!(written.starts_with("h,error_sup,observed_order\n"));
    std::fs::remove_file(cfg).ok();
    std::fs::remove_file(dest).ok();
}

#[test]
fn solve_runs_the_elliptic_preset_single_mesh() {
    let cfg = write_config("solve.cfg", "[problem]\npreset = degenerate-ode\n");
    let out = bin()
        .args(["solve", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout_of(&out);
    assert!(text.contains("PASS"), "{text}");
    std::fs::remove_file(cfg).ok();
}

#[test]
fn unknown_key_fails_with_line_number() {
    let cfg = write_config(
        "badkey.cfg",
        "[problem]\npreset = freeflow\nbogus = 1\n",
    );
    let out = bin()
        .args(["study", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
    std::fs::remove_file(cfg).ok();
}

#[test]
fn missing_config_file_fails() {
    let out = bin()
        .args(["study", "--config", "/nonexistent/degenfd.cfg"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn zero_threads_is_rejected() {
    let cfg = write_config(
        "threads.cfg",
        "[problem]\npreset = freeflow\n\n[study]\nlevels = 2\n",
    );
    let out = bin()
        .args(["study", "--config"])
        .arg(&cfg)
        .args(["--threads", "0"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    std::fs::remove_file(cfg).ok();
}
