//! The checked-in fuzz corpus seeds must stay valid inputs, except those
//! named `truncated*`.

use std::fs;
use std::path::{Path, PathBuf};

use mvlab::measures::dump::{decode_flow_binary, decode_paths_binary, read_paths_csv};
use mvlab::measures::ParticleEnsemble;

fn seeds(target: &str) -> Vec<(PathBuf, Vec<u8>, bool)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .map(|p| {
            let valid = !p.file_name().unwrap().to_string_lossy().starts_with("truncated");
            let bytes = fs::read(&p).unwrap();
            (p, bytes, valid)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

fn check<T, E: std::fmt::Debug>(target: &str, parse: impl Fn(&[u8]) -> Result<T, E>) {
    for (path, bytes, valid) in seeds(target) {
        let result = parse(&bytes);
        assert_eq!(result.is_ok(), valid, "{}: {:?}", path.display(), result.err());
    }
}

#[test]
fn ensemble_csv_seeds() {
    check("ensemble_csv", |b| ParticleEnsemble::read_csv(b));
}

#[test]
fn path_csv_seeds() {
    check("path_csv", |b| read_paths_csv(b));
}

#[test]
fn path_binary_seeds() {
    check("path_binary", decode_paths_binary);
}

#[test]
fn flow_binary_seeds() {
    check("flow_binary", decode_flow_binary);
}
