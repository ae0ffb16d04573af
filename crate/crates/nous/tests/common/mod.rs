#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn drone_fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/drone")
}

/// Copies the drone fixture into a fresh directory so state written next to
/// the config stays out of the source tree.
pub fn workspace() -> tempfile::TempDir {
    let tmp = tempfile::tempdir().unwrap();
    for f in ["curated.tsv", "seeds.jsonl", "stream.jsonl", "docs.jsonl", "nous.toml"] {
        std::fs::copy(drone_fixture().join(f), tmp.path().join(f)).unwrap();
    }
    tmp
}

pub fn nous(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nous"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

/// load-kb, ingest and retrain on the fixture; panics on any failure.
pub fn prepared() -> tempfile::TempDir {
    let ws = workspace();
    for args in [&["load-kb", "curated.tsv"][..], &["ingest", "stream.jsonl"], &["retrain"]] {
        let out = nous(ws.path(), args);
        assert!(out.status.success(), "{args:?}: {}", stderr(&out));
    }
    ws
}
