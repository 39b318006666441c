//! Helpers for driving the `inlslab` binary from integration tests.
#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

/// Runs the binary with the given arguments, ignoring any `INLSLAB_` variables of the caller.
pub fn inlslab(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_inlslab"));
    for (k, _) in std::env::vars().filter(|(k, _)| k.starts_with("INLSLAB_")) {
        cmd.env_remove(k);
    }
    cmd.args(args).envs(env.iter().copied()).output().expect("binary runs")
}

/// Runs `command` with `--config <dir>/<name>` after writing `text` there.
pub fn run_config(dir: &Path, name: &str, command: &str, text: &str) -> Output {
    let path = write(dir, name, text);
    inlslab(&[command, "--config", path.to_str().unwrap()], &[])
}

pub fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn sha256(path: &Path) -> String {
    Sha256::digest(fs::read(path).unwrap()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Hashes of every file below `dir`, keyed by the path relative to it.
pub fn hash_tree(dir: &Path) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().display().to_string();
                out.push((rel, sha256(&path)));
            }
        }
    }
    out.sort();
    out
}

/// Rows of a CSV file without quoted fields, as a header and string cells.
pub fn csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines().map(|l| l.split(',').map(String::from).collect::<Vec<_>>());
    let header = lines.next().unwrap();
    (header, lines.collect())
}

pub fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

pub fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// A config for the system `(d, alpha, kappa)` with `gamma = 0`, `omega = 1` on a radial grid.
pub fn radial_config(d: usize, alpha: f64, kappa: f64, extent: f64, n: usize, out: &Path, extra: &str) -> String {
    format!(
        "seed = 7\n\n[params]\nd = {d}\nalpha = {alpha:?}\nkappa = {kappa:?}\n\n[grid]\nkind = \"radial\"\nextent = {extent:?}\ncounts = [{n}]\n\n[solver]\ntol = 1e-10\n\n[output]\ndir = \"{}\"\n{extra}",
        out.display()
    )
}
