//! Subcommand bodies. Each takes a serialisable parameter struct, so the
//! same code serves both the individual subcommands and pipeline stages.

mod analysis;
mod ingest;
mod sim;

use std::path::Path;

use cascade_core::event_model::snapshot;
use cascade_core::Dataset;

use crate::error::{CliResult, Context};
use crate::report::{digest_file, InputDigest};

pub use analysis::{correlate, curve, fit_powerlaw, stats, thresholds, CorrelateParams, CurveParams, DensityOf, FitParams, StatsParams, ThresholdsParams};
pub use ingest::{ingest, IngestParams};
pub use sim::{recover, simulate, Manifest, ManifestRun, RecoverParams, SimFile, SimulateParams, MANIFEST_FILE};

fn load_snapshot(path: &Path) -> CliResult<(Dataset, InputDigest)> {
    let digest = digest_file(path)?;
    let d = snapshot::load(path).at(path)?;
    Ok((d, digest))
}

/// `(seed, generated)`: the given seed, or a fresh random one.
pub fn resolve_seed(seed: Option<u64>) -> (u64, bool) {
    match seed {
        Some(s) => (s, false),
        None => (rand::random(), true),
    }
}

fn default_bootstrap() -> usize {
    100
}

fn default_bins() -> usize {
    10
}
