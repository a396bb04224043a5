use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn mvlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mvlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_config(name: &str, out: &Path, extra: &[&str]) -> Output {
    let config = configs().join(name);
    let mut args = vec!["--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    mvlab(&args)
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn zero_model_gives_constant_paths() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config("simulate_zero.toml", dir.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("paths.csv")).unwrap();
    let mut rows = text.lines().skip(1).map(|l| {
        let cols: Vec<&str> = l.split(',').collect();
        (cols[1].parse::<usize>().unwrap(), cols[2].to_string())
    });
    let first: Vec<(usize, String)> = rows.by_ref().take(16).collect();
    for (i, (particle, value)) in rows.enumerate() {
        assert_eq!(particle, i % 16);
        assert_eq!(value, first[i % 16].1);
    }
    assert!(dir.path().join("run.toml").exists());
}

#[test]
fn ldp_benchmark_has_three_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config("ldp_brownian.toml", dir.path(), &["--set", "ldp.trials=[10000]"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("rate.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "epsilon,p_hat,se,eps_log_p");
    assert_eq!(lines.len(), 4);
    // Reflection principle at epsilon = 0.1: P = 2 Phi(-0.5 / sqrt(0.1)).
    let cols: Vec<f64> = lines[1].split(',').map(|c| c.parse().unwrap()).collect();
    assert!((cols[1] - 0.1138).abs() < 3.0 * cols[2], "{}", lines[1]);
    assert!(dir.path().join("rate.gp").exists());
}

#[test]
fn missing_seed_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(configs().join("simulate_zero.toml")).unwrap();
    let cfg = write(dir.path(), "c.toml", &text.replace("seed = 1\n", ""));
    let out = mvlab(&["--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("error[config]") && err.contains("seed"), "{err}");

    let with_flag = mvlab(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--seed",
        "4",
    ]);
    assert!(with_flag.status.success());
}

#[test]
fn error_categories() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = run_config("simulate_zero.toml", dir.path(), &["--set", "model.params.zeta=1"]);
    assert_eq!(unknown.status.code(), Some(2));
    let bad_key = run_config("simulate_zero.toml", dir.path(), &["--set", "solver.bogus=1"]);
    assert_eq!(bad_key.status.code(), Some(2));

    let blow = run_config(
        "simulate_zero.toml",
        dir.path(),
        &["--set", "model.params.a=1e300", "--set", "solver.intervals=4"],
    );
    assert_eq!(blow.status.code(), Some(3), "{}", String::from_utf8_lossy(&blow.stderr));
    assert!(String::from_utf8_lossy(&blow.stderr).contains("error[blow-up]"));

    let missing = mvlab(&["--config", "/nonexistent/x.toml", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(4));
    let blocker = write(dir.path(), "file", "");
    let unwritable = run_config("simulate_zero.toml", &blocker.join("sub"), &[]);
    assert_eq!(unwritable.status.code(), Some(4));
}

#[test]
fn sidecar_reproduces_outputs() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let out = run_config(
        "simulate_linear.toml",
        first.path(),
        &["--set", "solver.particles=300", "--set", "solver.intervals=50"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sidecar = fs::read_to_string(first.path().join("run.toml")).unwrap();
    assert!(sidecar.contains("solver.particles=300"));
    assert!(sidecar.contains("[[provenance.run]]"));
    let rerun = mvlab(&[
        "--config",
        first.path().join("run.toml").to_str().unwrap(),
        "--out",
        second.path().to_str().unwrap(),
    ]);
    assert!(rerun.status.success(), "{}", String::from_utf8_lossy(&rerun.stderr));
    for name in ["stats.csv", "paths.csv", "paths.bin"] {
        assert_eq!(
            fs::read(first.path().join(name)).unwrap(),
            fs::read(second.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let base = tempfile::tempdir().unwrap();
    let run = |threads: &str| {
        let dir = base.path().join(threads);
        let out = run_config("holder_curie_weiss.toml", &dir, &["--threads", threads, "--set", "solver.particles=256"]);
        assert!(out.status.success());
        (
            fs::read(dir.join("holder.csv")).unwrap(),
            fs::read(dir.join("holder_fit.csv")).unwrap(),
        )
    };
    let one = run("1");
    assert_eq!(run("3"), one);
}

#[test]
fn every_example_config_parses() {
    for entry in fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        mvlab_cli::ExperimentConfig::resolve(&text, &[], None, None, None)
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}
