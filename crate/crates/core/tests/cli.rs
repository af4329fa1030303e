use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use adl_core::dataset::load_dataset;
use adl_core::engine::{accuracy, percent};
use adl_core::harness::{read_report, CURVE_FILE, GRID_FILE, REPLAY_FILE, REPORT_FILE};

fn adl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adl")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = adl(args);
    assert!(out.status.success(), "adl {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn write_config(dir: &Path, extra: &str) -> PathBuf {
    let path = dir.join("test.conf");
    let text = format!(
        "seed = 5\n\
         dataset = {}\n\
         n_buildings = 20\n\
         n_timestamps = 60\n\
         hidden_width = 12\n\
         embedding_dim = 4\n\
         conv_filters = 2\n\
         max_epochs = 3\n\
         patience = 2\n\
         learning_rate = 0.01\n\
         rf_trees = 8\n\
         {extra}\n",
        dir.join("data.bin").display()
    );
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let a = dir.path().join("a.bin");
    let b = dir.path().join("b.bin");
    let stdout = ok(&["generate", "--config", s(&cfg), "--out", s(&a)]);
    assert!(stdout.contains("1200 points"));
    ok(&["generate", "--config", s(&cfg), "--out", s(&b)]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(load_dataset(&a).unwrap().len(), 1200);
    ok(&["generate", "--config", s(&cfg), "--out", s(&b), "--seed", "6"]);
    assert_ne!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn errors_are_one_machine_readable_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    fs::write(&cfg, "seed = 1\n").unwrap();
    let out = adl(&["generate", "--config", s(&cfg), "--out", s(&dir.path().join("x.bin"))]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error kind=config "), "{err}");
    assert!(err.contains("n_buildings"));

    fs::write(&cfg, "seeed = 1\n").unwrap();
    let err = String::from_utf8(adl(&["run", "--config", s(&cfg), "--out", "o"]).stderr).unwrap();
    assert!(err.contains("seeed"));

    let missing = dir.path().join("nope.conf");
    let err = String::from_utf8(adl(&["grid", "--config", s(&missing), "--out", "o"]).stderr).unwrap();
    assert!(err.starts_with("error kind=io ") && err.contains("nope.conf"), "{err}");
}

#[test]
fn run_writes_reproducible_reports_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "delta = 1\nvariable = y_hat\nvariant = min\nprediction_type = spatial");
    ok(&["generate", "--config", s(&cfg), "--out", s(&dir.path().join("data.bin"))]);
    let (a, b) = (dir.path().join("run_a"), dir.path().join("run_b"));
    ok(&["run", "--config", s(&cfg), "--out", s(&a)]);
    ok(&["run", "--config", s(&cfg), "--out", s(&b)]);
    for name in [REPORT_FILE, CURVE_FILE, "iterations.jsonl", "run.json", "initial.weights"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let rows = read_report(&a.join(REPORT_FILE)).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].data_pct, Some(100));
    let curve = fs::read_to_string(a.join(CURVE_FILE)).unwrap();
    assert_eq!(curve.lines().count(), 1 + 10);

    let out = dir.path().join("replay");
    ok(&["replay", "--config", s(&cfg), "--out", s(&out), "--artifacts", s(&a)]);
    let text = fs::read_to_string(out.join(REPLAY_FILE)).unwrap();
    assert_eq!(text.lines().count(), 1 + 10);
    let last = text.lines().last().unwrap();
    let original_final = last.split(',').nth(1).unwrap();
    assert_eq!(Some(original_final), rows[0].test_loss.as_deref());

    let err = String::from_utf8(adl(&["replay", "--config", s(&cfg), "--out", s(&out), "--artifacts", s(dir.path())]).stderr).unwrap();
    assert!(err.contains("run.json"), "{err}");
}

#[test]
fn infeasible_run_fails_before_training() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "n_budget = 40\nn_batch = 5\nn_iter = 10");
    ok(&["generate", "--config", s(&cfg), "--out", s(&dir.path().join("data.bin"))]);
    let out = adl(&["run", "--config", s(&cfg), "--out", s(&dir.path().join("r"))]);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error kind=config") && err.contains("n_batch"), "{err}");
    assert!(!dir.path().join("r").join("initial.weights").exists());
}

#[test]
fn grid_is_self_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "prediction_types = spatial, temporal\ndeltas = 0, 1\nvariants = rnd, max\nworkers = 2",
    );
    ok(&["generate", "--config", s(&cfg), "--out", s(&dir.path().join("data.bin"))]);
    let (a, b) = (dir.path().join("g1"), dir.path().join("g2"));
    ok(&["grid", "--config", s(&cfg), "--out", s(&a)]);
    ok(&["grid", "--config", s(&cfg), "--out", s(&b), "--seed", "5"]);
    assert_eq!(fs::read(a.join(GRID_FILE)).unwrap(), fs::read(b.join(GRID_FILE)).unwrap());

    let rows = read_report(&a.join(GRID_FILE)).unwrap();
    // 2 types x 2 deltas x (rf + pdl + 3 variables x 2 variants)
    assert_eq!(rows.len(), 2 * 2 * (2 + 3 * 2));
    assert!(rows.iter().all(|r| r.error.is_empty()), "{rows:?}");
    for r in &rows {
        let rf = rows
            .iter()
            .find(|x| x.adl_variable == "rf" && x.prediction_type == r.prediction_type && x.delta == r.delta)
            .unwrap();
        if r.adl_variable == "rf" {
            assert_eq!((r.data_pct, r.sensors_pct, r.accuracy_pct), (Some(0), Some(0), Some(0)));
            continue;
        }
        let acc = accuracy(r.test_loss_value().unwrap(), rf.test_loss_value().unwrap()).unwrap();
        assert_eq!(r.accuracy_pct, Some(percent(100.0 * acc)));
        if r.delta == "1" {
            assert_eq!(r.data_pct, Some(100));
        }
        if r.prediction_type == "temporal" {
            assert_eq!(r.sensors_pct, Some(0));
        }
    }
    assert!(a.join("curves").join("spatial_pdl_d0.csv").exists());
    assert!(a.join("curves").join("temporal_x_st_max_d1.csv").exists());
}
