//! Behavioral tests for the CLI surface: subcommands, file formats, exit
//! codes (0 success, 1 violated check, 2 usage, 3 budget).

use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sumprodlab"))
}

fn write(dir: &Path, name: &str, content: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn energy_reports_mixed_energy_15() {
    let dir = TempDir::new().unwrap();
    let set = write(dir.path(), "a.txt", "1\n2\n4\n");
    let out = bin()
        .args(["energy", "--set"])
        .arg(&set)
        .args(["--u", "1", "--k", "2"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["energy"], "15");
    assert_eq!(doc["table_keys"], 6);
    assert_eq!(doc["total_mass"], "9");
    assert_eq!(doc["schema"], 1);
}

#[test]
fn growth_rejects_zero_shift_with_exit_2() {
    let dir = TempDir::new().unwrap();
    let set = write(dir.path(), "a.txt", "1\n2\n4\n");
    let out = bin()
        .args(["growth", "--set"])
        .arg(&set)
        .args(["--u", "0", "--k", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = bin().args(["energy", "--frobnicate"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn budget_error_exits_3() {
    let dir = TempDir::new().unwrap();
    let set = write(dir.path(), "a.txt", "1\n2\n4\n");
    let out = bin()
        .args(["energy", "--set"])
        .arg(&set)
        .args(["--u", "1", "--k", "2", "--budget", "8"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn budget_env_var_is_honored() {
    let dir = TempDir::new().unwrap();
    let set = write(dir.path(), "a.txt", "1\n2\n4\n");
    let out = bin()
        .args(["energy", "--set"])
        .arg(&set)
        .args(["--u", "1", "--k", "2"])
        .env("SUMPRODLAB_BUDGET", "8")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn verify_single_suite_passes() {
    let out = bin()
        .args(["verify", "--suite", "k2-closed-form", "--n-max", "20"])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout(&out).contains("PASS k2-closed-form"));
}

#[test]
fn verify_unknown_suite_is_usage_error() {
    let out = bin().args(["verify", "--suite", "nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gen_families_round_trip() {
    let dir = TempDir::new().unwrap();
    let gp = dir.path().join("gp.txt");
    let out = bin()
        .args(["gen", "gp", "--ratio", "2", "--n", "4", "--out"])
        .arg(&gp)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(std::fs::read_to_string(&gp).unwrap(), "1\n2\n4\n8\n");

    let md = dir.path().join("md.txt");
    bin()
        .args([
            "gen", "multidim", "--primes", "2,3", "--dims", "2,2", "--out",
        ])
        .arg(&md)
        .output()
        .unwrap();
    assert_eq!(std::fs::read_to_string(&md).unwrap(), "1\n2\n3\n6\n");

    // Same seed twice: byte-identical set files.
    let r1 = dir.path().join("r1.txt");
    let r2 = dir.path().join("r2.txt");
    for out in [&r1, &r2] {
        bin()
            .args(["gen", "random-set", "--count", "10", "--seed", "7", "--out"])
            .arg(out)
            .output()
            .unwrap();
    }
    assert_eq!(std::fs::read(&r1).unwrap(), std::fs::read(&r2).unwrap());
}

#[test]
fn solve_count_and_basis_and_incidence() {
    let dir = TempDir::new().unwrap();
    let set = write(dir.path(), "a.txt", "1\n2\n4\n");
    let out = bin()
        .args(["solve-count", "--set"])
        .arg(&set)
        .args(["--c1", "1", "--c2", "-1"])
        .output()
        .unwrap();
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["report"]["count"], 1);

    let zeroone = write(dir.path(), "b.txt", "0\n1\n");
    let lines = write(dir.path(), "lines.txt", "1 -1 0\n0 1 1\n");
    let out = bin()
        .args(["incidence", "--set"])
        .arg(&zeroone)
        .arg("--lines")
        .arg(&lines)
        .output()
        .unwrap();
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["report"]["total"], 4);

    let bb = write(dir.path(), "bb.txt", "1\n2\n");
    let bp = write(dir.path(), "bp.txt", "1\n");
    let target = write(dir.path(), "t.txt", "2\n3\n");
    let out = bin()
        .args(["basis", "--set"])
        .arg(&target)
        .arg("--set-b")
        .arg(&bb)
        .arg("--set-b2")
        .arg(&bp)
        .output()
        .unwrap();
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["report"]["s"], 2);
}

#[test]
fn lambda_includes_grid_for_small_sets() {
    let dir = TempDir::new().unwrap();
    let set = write(dir.path(), "a.txt", "1\n2\n4\n");
    let out = bin()
        .args(["lambda", "--set"])
        .arg(&set)
        .args(["--u", "1", "--k", "2", "--iters", "60"])
        .output()
        .unwrap();
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let expect = (5.0f64 / 3.0).sqrt();
    let grid = doc["grid"]["value"].as_f64().unwrap();
    let ascent = doc["ascent"]["value"].as_f64().unwrap();
    assert!((grid - expect).abs() < 1e-3);
    assert!((ascent - expect).abs() < 1e-6);
}

#[test]
fn separate_probe_respects_bounds() {
    let dir = TempDir::new().unwrap();
    let set = write(dir.path(), "x.txt", "2\n4\n8\n");
    let out = bin()
        .args(["separate", "--set"])
        .arg(&set)
        .args(["--u", "1", "--k", "2", "--probes", "10", "--seed", "3"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(doc["report"]["max_ratio"].as_f64().unwrap() <= 3.0 + 1e-9);
}

#[test]
fn separate_decomposition_file() {
    let dir = TempDir::new().unwrap();
    let decomp = write(
        dir.path(),
        "d.json",
        r#"{"X": ["2", "4"], "fibers": {"2": ["1"], "4": ["1"]}}"#,
    );
    let out = bin()
        .args(["separate", "--decomp"])
        .arg(&decomp)
        .args(["--u", "1", "--k", "2"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let ratio = doc["report"]["ratio"].as_f64().unwrap();
    assert!((ratio - 1.5f64.sqrt()).abs() < 1e-9);
}

#[test]
fn fiber_pipeline_on_box_graph() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    bin()
        .args(["gen", "box", "--dim", "2", "--side", "3", "--out"])
        .arg(&a)
        .output()
        .unwrap();
    let g = dir.path().join("g.txt");
    bin()
        .args(["gen", "graph", "--set"])
        .arg(&a)
        .arg("--set-b")
        .arg(&a)
        .args(["--density", "1.0", "--seed", "0", "--out"])
        .arg(&g)
        .output()
        .unwrap();
    let out = bin()
        .args(["fiber", "--set"])
        .arg(&a)
        .arg("--set-b")
        .arg(&a)
        .arg("--graph")
        .arg(&g)
        .args(["--t", "1"])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["verified"], true);
    assert_eq!(doc["certificate"]["m_a"], 3);
    assert_eq!(doc["certificate"]["delta1"], "1");
}

#[test]
fn seeded_subcommands_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let set = write(dir.path(), "a.txt", "1\n2\n4\n8\n");
    for args in [
        vec![
            "lambda",
            "--u",
            "1",
            "--k",
            "2",
            "--seed",
            "9",
            "--no-timings",
        ],
        vec![
            "separate",
            "--u",
            "1",
            "--k",
            "2",
            "--probes",
            "8",
            "--seed",
            "9",
            "--no-timings",
        ],
    ] {
        let run = || {
            let out = bin()
                .arg(args[0])
                .arg("--set")
                .arg(&set)
                .args(&args[1..])
                .output()
                .unwrap();
            assert!(out.status.success());
            out.stdout
        };
        assert_eq!(run(), run(), "{} not deterministic", args[0]);
    }
}

#[test]
fn duplicate_set_entries_are_input_errors() {
    let dir = TempDir::new().unwrap();
    let set = write(dir.path(), "dup.txt", "1\n2\n2/1\n");
    let out = bin()
        .args(["energy", "--set"])
        .arg(&set)
        .args(["--u", "1", "--k", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dup.txt"));
}

#[test]
fn csv_format_is_flat() {
    let dir = TempDir::new().unwrap();
    let set = write(dir.path(), "a.txt", "1\n2\n4\n");
    let out = bin()
        .args(["energy", "--set"])
        .arg(&set)
        .args(["--u", "1", "--k", "2", "--format", "csv", "--no-timings"])
        .output()
        .unwrap();
    let text = stdout(&out);
    assert_eq!(
        text,
        "k,u,mode,energy,table_keys,total_mass\n2,1,exact,15,6,9\n"
    );
}
