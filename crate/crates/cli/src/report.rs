//! Run reports: what ran, on which bytes, with which settings, and what came
//! out. Everything except `timing` is a pure function of inputs and seed.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult, Context};

pub const TOOL: &str = "cascade";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub elapsed_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub inputs: Vec<InputDigest>,
    pub config: Value,
    pub result: Value,
    pub timing: Timing,
}

impl RunReport {
    pub fn new(command: &str, outcome: Outcome, elapsed_ms: f64) -> Self {
        Self {
            tool: TOOL.into(),
            version: VERSION.into(),
            command: command.into(),
            inputs: outcome.inputs,
            config: outcome.config,
            result: outcome.result,
            timing: Timing { elapsed_ms },
        }
    }

    /// The report as JSON with the timing field removed.
    pub fn stable_json(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("reports serialise");
        v.as_object_mut().expect("object").remove("timing");
        v
    }
}

/// What a command hands back for its report.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub inputs: Vec<InputDigest>,
    pub config: Value,
    pub result: Value,
}

pub fn digest_file(path: &Path) -> CliResult<InputDigest> {
    let mut file = File::open(path).at(path)?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    let mut bytes = 0u64;
    loop {
        let n = file.read(&mut buf).at(path)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
        bytes += n as u64;
    }
    Ok(InputDigest {
        path: path.display().to_string(),
        sha256: hex::encode(hasher.finalize()),
        bytes,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let file = File::create(path).at(path)?;
    let mut out = BufWriter::new(file);
    to_writer(&mut out, value).map_err(|e| CliError::io(path, e))?;
    out.flush().at(path)
}

/// Pretty JSON followed by a newline.
pub fn to_writer<W: Write + ?Sized, T: Serialize>(out: &mut W, value: &T) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    out.write_all(b"\n")
}
