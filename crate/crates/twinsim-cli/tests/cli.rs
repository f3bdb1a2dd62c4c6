//! Black-box CLI tests over the compiled binary.

use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = r#"
seeds = [0, 1]
schemes = ["proposed", "fixed-dt"]

[scenario]
users = 6
catalog_size = 12

[sim]
horizon = 10

[sweep]
values = [6e5, 8e5]
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_twinsim"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("exp.toml");
    std::fs::write(&path, body).unwrap();
    path
}

fn run_ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn validate_config_accepts_good_and_names_bad_keys() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_config(dir.path(), TINY);
    let out = bin()
        .args(["validate-config", "--config"])
        .arg(&good)
        .output()
        .unwrap();
    run_ok(&out);

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[scenario]\nbogus = 1\n").unwrap();
    let out = bin()
        .args(["validate-config", "--config"])
        .arg(&bad)
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

#[test]
fn run_exports_deterministic_files() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), TINY);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out_dir in [&out_a, &out_b] {
        let out = bin()
            .args(["run", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(out_dir)
            .args(["--format", "csv", "--format", "jsonl"])
            .output()
            .unwrap();
        run_ok(&out);
    }
    for name in [
        "runs.csv",
        "slots.csv",
        "aggregates.csv",
        "runs.jsonl",
        "slots.jsonl",
        "aggregates.jsonl",
    ] {
        let a = std::fs::read(out_a.join(name)).unwrap();
        let b = std::fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between reruns");
        assert!(!a.is_empty());
    }
    // run truncates the sweep to its first value.
    let runs = std::fs::read_to_string(out_a.join("runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 1 + 2 * 2);
}

#[test]
fn sweep_reports_failures_with_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        &TINY.replace("values = [6e5, 8e5]", "values = [6e5, -1.0]"),
    );
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["sweep", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out_dir)
        .args(["--parallel", "2"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("failed:"), "{stderr}");
    assert!(stderr.contains("total_bandwidth_hz"), "{stderr}");
    // Completed rows are still exported.
    let runs = std::fs::read_to_string(out_dir.join("runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 1 + 2 * 2 * 2);
}

#[test]
fn seed_and_scheme_overrides_shrink_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), TINY);
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["sweep", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out_dir)
        .args(["--seeds", "5", "--scheme", "proposed", "--format", "csv"])
        .output()
        .unwrap();
    run_ok(&out);
    let runs = std::fs::read_to_string(out_dir.join("runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 1 + 2);
    assert!(runs.contains(",5,proposed,"));
    assert!(!out_dir.join("runs.jsonl").exists());
}

#[test]
fn compare_writes_paired_table() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), TINY);
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["compare", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    run_ok(&out);
    let compare = std::fs::read_to_string(out_dir.join("compare.csv")).unwrap();
    assert!(compare.starts_with("value,scheme_a,scheme_b,pairs,wins_a,mean_gap"));
    // Two sweep values, one scheme pair each.
    assert_eq!(compare.lines().count(), 1 + 2);
}

#[test]
fn env_var_provides_default_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), TINY);
    let out_dir = dir.path().join("from-env");
    let out = bin()
        .args(["run", "--config"])
        .arg(&config)
        .env("TWINSIM_OUT", &out_dir)
        .output()
        .unwrap();
    run_ok(&out);
    assert!(out_dir.join("runs.csv").exists());
}
