#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

/// Runs the binary in `cwd` with a clean environment for the output
/// override and quiet logging.
pub fn pathwise(cwd: &Path, args: &[&str]) -> Output {
    pathwise_env(cwd, args, &[])
}

pub fn pathwise_env(cwd: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pathwise"));
    cmd.current_dir(cwd).args(args).env_remove("PATHWISE_OUTPUT_DIR").env("RUST_LOG", "warn");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

/// Like [`pathwise`] but panics with stderr on failure.
pub fn ok(cwd: &Path, args: &[&str]) -> Output {
    let out = pathwise(cwd, args);
    assert!(
        out.status.success(),
        "pathwise {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Every file under `root` keyed by relative path.
pub fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(base: &Path, dir: &Path, acc: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(base, &path, acc);
            } else {
                acc.insert(path.strip_prefix(base).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    let mut acc = BTreeMap::new();
    walk(root, root, &mut acc);
    acc
}

/// Runs the same command twice into `dir`, moving the first result aside,
/// and reports whether both trees are byte-identical.
pub fn rerun_identical(cwd: &Path, dir: &str, args: &[&str]) -> bool {
    ok(cwd, args);
    let first = snapshot(&cwd.join(dir));
    fs::rename(cwd.join(dir), cwd.join(format!("{dir}.first"))).unwrap();
    ok(cwd, args);
    let second = snapshot(&cwd.join(dir));
    !first.is_empty() && first == second
}

pub fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// The last stderr line, parsed as the machine-readable error record.
pub fn error_line(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let last = stderr.lines().last().expect("an error line");
    serde_json::from_str(last).unwrap_or_else(|_| panic!("not JSON: {last}"))
}
