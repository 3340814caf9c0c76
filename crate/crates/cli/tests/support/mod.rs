#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

pub const BIN: &str = env!("CARGO_BIN_EXE_cascade");

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Run {
    /// The report with `timing` removed.
    pub fn stable(&self) -> Value {
        let mut v: Value = serde_json::from_str(&self.stdout)
            .unwrap_or_else(|e| panic!("stdout is not a report ({e}):\n{}\nstderr:\n{}", self.stdout, self.stderr));
        v.as_object_mut().expect("object").remove("timing");
        v
    }

    pub fn ok(self) -> Self {
        assert_eq!(self.code, 0, "exit {}\nstderr:\n{}", self.code, self.stderr);
        self
    }
}

pub fn cascade_env(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(BIN);
    cmd.args(args).current_dir(dir).env_remove("CASCADE_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("spawn cascade");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).expect("utf-8 stdout"),
        stderr: String::from_utf8(out.stderr).expect("utf-8 stderr"),
    }
}

pub fn cascade(dir: &Path, args: &[&str]) -> Run {
    cascade_env(dir, args, &[])
}

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// A scratch directory holding a copy of the fixtures.
pub fn workspace() -> TempDir {
    let dir = tempfile::tempdir().expect("tempdir");
    for entry in fs::read_dir(fixtures()).expect("fixtures") {
        let entry = entry.expect("entry");
        fs::copy(entry.path(), dir.path().join(entry.file_name())).expect("copy fixture");
    }
    dir
}

/// Compares `actual` with `tests/golden/<name>`; `UPDATE_GOLDEN=1` rewrites it.
pub fn check_golden(name: &str, actual: &str) -> Result<(), String> {
    let path = golden_dir().join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::create_dir_all(golden_dir()).map_err(|e| e.to_string())?;
        fs::write(&path, actual).map_err(|e| e.to_string())?;
        return Ok(());
    }
    let expected = fs::read_to_string(&path).map_err(|e| format!("{}: {e} (run with UPDATE_GOLDEN=1)", path.display()))?;
    if expected == actual {
        Ok(())
    } else {
        let line = expected
            .lines()
            .zip(actual.lines())
            .position(|(a, b)| a != b)
            .unwrap_or(expected.lines().count().min(actual.lines().count()));
        Err(format!("{name} differs from golden at line {}", line + 1))
    }
}

pub fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json") + "\n"
}

/// The scenario behind the golden files: every subcommand on the fixtures,
/// with relative paths so reports do not depend on the scratch location.
/// Returns `(golden name, content)` pairs.
pub fn golden_scenario() -> Vec<(String, String)> {
    let ws = workspace();
    let dir = ws.path();
    let mut out = Vec::new();
    let mut report = |name: &str, args: &[&str]| {
        let run = cascade(dir, args).ok();
        out.push((format!("{name}.json"), pretty(&run.stable())));
    };
    report("ingest", &["ingest", "--adoptions", "adoptions.csv", "--follows", "follows.csv", "--out", "s.cscd"]);
    report(
        "thresholds",
        &["thresholds", "s.cscd", "--out", "exposures.tsv", "--per-user", "thresholds.tsv", "--density", "density.tsv"],
    );
    report(
        "fit_powerlaw",
        &["fit-powerlaw", "s.cscd", "--seed", "3", "--bootstrap", "25", "--out", "rank.tsv", "--histogram", "hist.tsv"],
    );
    report("curve", &["curve", "s.cscd", "--tag", "#rust", "--bucket", "100", "--out", "curve.tsv"]);
    report("correlate", &["correlate", "s.cscd", "--bins", "3", "--out", "bins.tsv"]);
    report("stats", &["stats", "s.cscd"]);
    report(
        "simulate",
        &["simulate", "--model", "threshold", "--config", "sim.json", "--runs", "3", "--seed", "5", "--out", "runs"],
    );
    report("recover", &["recover", "runs", "--out", "margins.tsv"]);
    for file in [
        "exposures.tsv",
        "thresholds.tsv",
        "density.tsv",
        "rank.tsv",
        "hist.tsv",
        "curve.tsv",
        "bins.tsv",
        "margins.tsv",
        "runs/t0.csv",
        "runs/follows.csv",
    ] {
        let content = fs::read_to_string(dir.join(file)).expect(file);
        out.push((file.replace('/', "_"), content));
    }
    out
}
