//! End-to-end runs of the `ampctl` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ampctl::trace::read_trace_file;

fn ampctl(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ampctl"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn ampctl")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn example1_writes_trace_metrics_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = ampctl(&["example1", "--out", "run"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let run = dir.path().join("run");
    let text = fs::read_to_string(run.join("trace.csv")).unwrap();
    assert!(text.starts_with("k,t,r,ym,y,u,f_true,f_hat,eta,e,selected_index,a,applied\n"));
    assert_eq!(read_trace_file(&run.join("trace.csv")).unwrap().len(), 1000);

    let metrics: serde_json::Value =
        serde_json::from_slice(&fs::read(run.join("metrics.json")).unwrap()).unwrap();
    assert!(metrics["tracking_rmse"].as_f64().unwrap() > 0.0);
    let stdout: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(stdout, metrics);

    let config: serde_json::Value =
        serde_json::from_slice(&fs::read(run.join("config.json")).unwrap()).unwrap();
    assert_eq!(config["config"]["noise"]["seed"], 1);
    assert_eq!(config["steps"], 1000);
    assert!(config["noise_generator"]
        .as_str()
        .unwrap()
        .contains("ChaCha8"));
    let s: Vec<f64> = serde_json::from_value(config["reference_coefficients"].clone()).unwrap();
    assert!((s[0] - 1.3).abs() < 1e-12);
}

#[test]
fn default_output_directory_is_under_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out = ampctl(
        &[
            "example2",
            "--set",
            "duration=2",
            "--set",
            "metrics_window_start=1",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(dir.path().join("runs/example2/trace.csv").exists());
}

#[test]
fn overrides_switch_on_the_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let out = ampctl(
        &[
            "example1",
            "--out",
            "o",
            "--set",
            "noise.std=0",
            "--set",
            "oracle=true",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let trace = read_trace_file(&dir.path().join("o/trace.csv")).unwrap();
    assert!(trace.iter().all(|r| (r.y - r.ym).abs() <= 1e-9));
}

#[test]
fn two_runs_produce_identical_traces() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a", "b"] {
        assert!(ampctl(&["example2", "--out", name], dir.path())
            .status
            .success());
    }
    let a = fs::read(dir.path().join("a/trace.csv")).unwrap();
    let b = fs::read(dir.path().join("b/trace.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn custom_config_file_merges_over_its_plant_defaults() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("c.json"),
        r#"{"plant": {"kind": "example2"}, "duration": 5, "metrics_window_start": 2, "identifier": {"safeguard": "skip"}}"#,
    )
    .unwrap();
    let out = ampctl(
        &[
            "custom",
            "c.json",
            "--out",
            "c",
            "--set",
            "feedback=plant_history",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let config: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("c/config.json")).unwrap()).unwrap();
    assert_eq!(config["steps"], 100);
    assert_eq!(config["config"]["identifier"]["safeguard"], "skip");
    assert_eq!(config["config"]["feedback"], "plant_history");
    assert_eq!(config["config"]["identifier"]["known_input_gain"], 1.0);
}

#[test]
fn missing_config_fails_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let out = ampctl(&["custom", "missing.json"], dir.path());
    assert!(!out.status.success());
    assert!(
        stderr(&out).contains("config not found"),
        "{}",
        stderr(&out)
    );
    assert!(!dir.path().join("runs").exists());
}

#[test]
fn unknown_keys_are_named() {
    let dir = tempfile::tempdir().unwrap();
    let out = ampctl(&["example1", "--set", "noise.sigma=1"], dir.path());
    assert!(!out.status.success());
    assert!(stderr(&out).contains("noise.sigma"), "{}", stderr(&out));

    fs::write(
        dir.path().join("bad.json"),
        r#"{"dictionary": {"level": 8}}"#,
    )
    .unwrap();
    let out = ampctl(&["example1", "--config", "bad.json"], dir.path());
    assert!(!out.status.success());
    assert!(
        stderr(&out).contains("dictionary.level"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn invalid_values_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    for set in ["ts=-1", "noise.std=-0.1", "identifier.epsilon=0"] {
        let out = ampctl(&["example1", "--set", set], dir.path());
        assert!(!out.status.success(), "{set} accepted");
        assert!(
            stderr(&out).starts_with("error: "),
            "{set}: {}",
            stderr(&out)
        );
    }
}

#[test]
fn svg_plots_are_written_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let out = ampctl(
        &[
            "example1",
            "--out",
            "s",
            "--svg",
            "--set",
            "duration=3",
            "--set",
            "metrics_window_start=1",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    for name in ["output.svg", "input.svg", "identification.svg", "atoms.svg"] {
        let svg = fs::read_to_string(dir.path().join("s").join(name)).unwrap();
        assert!(
            svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"),
            "{name}"
        );
    }
}

#[test]
fn export_atoms_and_decompose() {
    let dir = tempfile::tempdir().unwrap();
    let out = ampctl(&["export-atoms", "--out", "atoms"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let atoms = fs::read_to_string(dir.path().join("atoms/atoms.csv")).unwrap();
    let header = atoms.lines().next().unwrap();
    assert_eq!(header.split(',').count(), 28);
    assert_eq!(atoms.lines().count(), 1001);

    // a signal made of column 3 of the export decomposes onto that atom
    let signal: String = std::iter::once("f".to_string())
        .chain(
            atoms
                .lines()
                .skip(1)
                .map(|l| l.split(',').nth(4).unwrap().to_string()),
        )
        .collect::<Vec<_>>()
        .join("\n");
    fs::write(dir.path().join("sig.csv"), signal).unwrap();
    let out = ampctl(
        &["decompose", "sig.csv", "--out", "d", "--max-iters", "5"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = fs::read_to_string(dir.path().join("d/decomposition.csv")).unwrap();
    let mut lines = rows.lines();
    assert_eq!(
        lines.next(),
        Some("iteration,index,coefficient,residual_norm")
    );
    assert!(lines.next().unwrap().starts_with("0,,,"));
    assert!(lines.next().unwrap().starts_with("1,3,"));
}
