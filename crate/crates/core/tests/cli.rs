//! Bundled data files and the command-line contract: subcommands, exit
//! codes, error classes and reproducible CSV output.

use radual::model::{
    desk_hydro_config, hydro_config_to_json, instance_to_json, parse_hydro_config_file, parse_instance_file, tiny_defer,
};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn radual(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radual"))
        .args(args)
        .env_remove("RADUAL_LP_TOL")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn bundled_files_match_builders() {
    let text = std::fs::read_to_string(data("tiny-defer.json")).unwrap();
    assert_eq!(text, instance_to_json(&tiny_defer(0.5, 0.0)));
    let inst = parse_instance_file(data("tiny-defer.json")).unwrap();
    assert_eq!(inst.horizon, 2);
    assert_eq!(inst.branching(), vec![1, 2]);

    let cfg_text = std::fs::read_to_string(data("desk-hydro-2.config.json")).unwrap();
    assert_eq!(cfg_text, hydro_config_to_json(&desk_hydro_config()));
    assert_eq!(parse_hydro_config_file(data("desk-hydro-2.config.json")).unwrap(), desk_hydro_config());
}

#[test]
fn solve_both_converges_with_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = radual(&[
        "solve",
        "--instance",
        data("tiny-defer.json").to_str().unwrap(),
        "--mode",
        "both",
        "--tol",
        "1e-4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("convergence.csv")).unwrap();
    assert!(csv.starts_with("iter,lb,ub,gap,t_ms,primal_ms,dual_ms\n"));
    for f in ["summary.json", "primal_cuts.json", "dual_cuts.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
}

#[test]
fn extensive_prints_value() {
    let o = radual(&["solve", "--instance", data("tiny-defer.json").to_str().unwrap(), "--mode", "extensive"]);
    assert_eq!(o.status.code(), Some(0));
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - 3.0).abs() < 1e-9);
}

#[test]
fn dual_without_iterations_is_capped() {
    let o = radual(&[
        "solve",
        "--instance",
        data("tiny-defer.json").to_str().unwrap(),
        "--mode",
        "dual",
        "--iters",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn identical_runs_give_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let o = radual(&[
            "solve",
            "--instance",
            data("tiny-defer.json").to_str().unwrap(),
            "--mode",
            "both",
            "--seed",
            "5",
            "--iters",
            "10",
            "--tol",
            "1e-12",
            "--no-timings",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.code().is_some_and(|c| c == 0 || c == 2), "{}", stderr(&o));
        outputs.push(std::fs::read(out.join("convergence.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn input_errors_are_classified() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(data("tiny-defer.json")).unwrap();
    let cases = [
        ("truncated.json", text[..text.len() / 3].to_string(), "[parse]", None),
        (
            "alpha.json",
            text.replacen("\"alpha\": 0.5", "\"alpha\": 0", 1),
            "[schema]",
            Some("/stages/0/risk/alpha"),
        ),
        ("probs.json", text.replacen("\"p\": 0.5", "\"p\": 0.9", 1), "[validation]", None),
    ];
    for (name, body, class, pointer) in cases {
        let path = dir.path().join(name);
        std::fs::write(&path, body).unwrap();
        let o = radual(&["solve", "--instance", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(1), "{name}");
        let err = stderr(&o);
        assert!(err.contains(class), "{name}: {err}");
        if let Some(p) = pointer {
            assert!(err.contains(p), "{name}: {err}");
        }
    }
    let o = radual(&["solve", "--instance", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("[io]"));
}

#[test]
fn lp_tolerance_override_is_checked() {
    let o = Command::new(env!("CARGO_BIN_EXE_radual"))
        .args(["solve", "--instance", data("tiny-defer.json").to_str().unwrap(), "--mode", "extensive"])
        .env("RADUAL_LP_TOL", "-1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("RADUAL_LP_TOL"));
}

#[test]
fn hydro_gen_writes_a_loadable_instance() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("desk.json");
    let o = radual(&[
        "hydro-gen",
        "--config",
        data("desk-hydro-2.config.json").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let inst = parse_instance_file(&out).unwrap();
    assert_eq!(inst.branching(), vec![3, 3, 3, 3]);
}

#[test]
fn lipstudy_and_timing_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = radual(&[
        "lipstudy",
        "--instance",
        data("tiny-defer.json").to_str().unwrap(),
        "--factors",
        "1,10",
        "--iters",
        "10",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = std::fs::read_to_string(dir.path().join("lipschitz_study.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 2 * 2);

    let o = radual(&[
        "timing",
        "--config",
        data("desk-hydro-2.config.json").to_str().unwrap(),
        "--branches",
        "2,3",
        "--iters",
        "3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = std::fs::read_to_string(dir.path().join("timing.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
}
