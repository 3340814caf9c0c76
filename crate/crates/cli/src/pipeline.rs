//! Multi-stage runs from one JSON configuration.
//!
//! Stages run in the fixed order ingest, thresholds, fit, correlate,
//! simulate, recover; any subset may be listed, each at most once. Every
//! artifact lands under `out_dir`, and relative input paths are resolved
//! against the configuration file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use cascade_core::exposure::PopularityMode;
use cascade_core::sim::ModelKind;
use cascade_core::stats::correlation::CorrelationMethod;
use cascade_core::stats::popularity::PopularityMeasure;
use cascade_core::stats::powerlaw::DEFAULT_MAX_ALPHA;
use cascade_core::time::TimeUnit;
use cascade_core::TieRule;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::commands::{
    correlate, fit_powerlaw, ingest, recover, resolve_seed, simulate, thresholds, CorrelateParams, DensityOf,
    FitParams, IngestParams, RecoverParams, SimFile, SimulateParams, ThresholdsParams,
};
use crate::error::{CliError, CliResult, Context};
use crate::report::{digest_file, InputDigest, Outcome};

pub const SNAPSHOT_FILE: &str = "snapshot.cscd";
pub const RUNS_DIR: &str = "runs";

fn default_bootstrap() -> usize {
    100
}

fn default_bins() -> usize {
    10
}

fn default_runs() -> usize {
    1
}

fn default_max_alpha() -> Option<f64> {
    Some(DEFAULT_MAX_ALPHA)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case", deny_unknown_fields)]
pub enum Stage {
    Ingest {
        adoptions: PathBuf,
        #[serde(default)]
        follows: Option<PathBuf>,
        #[serde(default)]
        reverse_edges: bool,
        #[serde(default)]
        mutual_only: bool,
        #[serde(default)]
        strict: bool,
        #[serde(default)]
        time_unit: TimeUnit,
        #[serde(default)]
        force: bool,
    },
    Thresholds {
        #[serde(default)]
        ties: TieRule,
        #[serde(default)]
        popularity: PopularityMode,
        #[serde(default)]
        density_of: DensityOf,
        #[serde(default)]
        bandwidth: Option<f64>,
    },
    Fit {
        #[serde(default)]
        measure: PopularityMeasure,
        #[serde(default = "default_bootstrap")]
        bootstrap: usize,
        #[serde(default)]
        xmin: Option<u64>,
        #[serde(default = "default_max_alpha")]
        max_alpha: Option<f64>,
    },
    Correlate {
        #[serde(default = "default_bins")]
        bins: usize,
        #[serde(default)]
        method: CorrelationMethod,
        #[serde(default)]
        ties: TieRule,
        #[serde(default)]
        popularity: PopularityMode,
    },
    Simulate {
        model: ModelKind,
        sim: SimFile,
        #[serde(default = "default_runs")]
        runs: usize,
    },
    Recover {
        /// Defaults to the simulate stage's output.
        #[serde(default)]
        runs: Option<PathBuf>,
    },
}

impl Stage {
    pub fn name(&self) -> &'static str {
        match self {
            Stage::Ingest { .. } => "ingest",
            Stage::Thresholds { .. } => "thresholds",
            Stage::Fit { .. } => "fit",
            Stage::Correlate { .. } => "correlate",
            Stage::Simulate { .. } => "simulate",
            Stage::Recover { .. } => "recover",
        }
    }

    fn order(&self) -> usize {
        match self {
            Stage::Ingest { .. } => 0,
            Stage::Thresholds { .. } => 1,
            Stage::Fit { .. } => 2,
            Stage::Correlate { .. } => 3,
            Stage::Simulate { .. } => 4,
            Stage::Recover { .. } => 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub out_dir: PathBuf,
    /// Root seed for every randomised stage.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Dataset for the analysis stages when there is no ingest stage.
    #[serde(default)]
    pub snapshot: Option<PathBuf>,
    pub stages: Vec<Stage>,
}

impl PipelineConfig {
    pub fn validate(&self) -> CliResult<()> {
        if self.stages.is_empty() {
            return Err(CliError::Usage("pipeline config lists no stages".into()));
        }
        for w in self.stages.windows(2) {
            if w[0].order() >= w[1].order() {
                return Err(CliError::Usage(format!(
                    "stage {} cannot follow {}; stages run once each in the order ingest, thresholds, fit, correlate, simulate, recover",
                    w[1].name(),
                    w[0].name()
                )));
            }
        }
        let has = |name: &str| self.stages.iter().any(|s| s.name() == name);
        let needs_snapshot = ["thresholds", "fit", "correlate"].iter().any(|n| has(n));
        if needs_snapshot && !has("ingest") && self.snapshot.is_none() {
            return Err(CliError::Usage("analysis stages need an ingest stage or a top-level `snapshot`".into()));
        }
        let recover_has_input = self
            .stages
            .iter()
            .any(|s| matches!(s, Stage::Recover { runs: Some(_) }));
        if has("recover") && !has("simulate") && !recover_has_input {
            return Err(CliError::Usage("the recover stage needs a simulate stage or a `runs` directory".into()));
        }
        Ok(())
    }
}

pub fn load_config(path: &Path) -> CliResult<PipelineConfig> {
    let text = fs::read_to_string(path).at(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Runs every stage and returns the consolidated outcome. `seed_override`
/// replaces the configuration's seed.
pub fn run_pipeline(config_path: &Path, seed_override: Option<u64>) -> CliResult<Outcome> {
    let config_digest = digest_file(config_path)?;
    let config = load_config(config_path)?;
    config.validate()?;
    let base = config_path.parent().unwrap_or(Path::new("")).to_path_buf();
    let rebase = |p: &Path| if p.is_relative() { base.join(p) } else { p.to_path_buf() };
    let out_dir = rebase(&config.out_dir);
    fs::create_dir_all(&out_dir).at(&out_dir)?;
    let (seed, seed_generated) = resolve_seed(seed_override.or(config.seed));
    let out = |name: &str| out_dir.join(name);

    let snapshot = match config.stages.first() {
        Some(Stage::Ingest { .. }) => out(SNAPSHOT_FILE),
        _ => config.snapshot.as_deref().map(rebase).unwrap_or_else(|| out(SNAPSHOT_FILE)),
    };
    let mut runs_dir = out(RUNS_DIR);

    let mut inputs: Vec<InputDigest> = vec![config_digest];
    let mut stages = Vec::new();
    for stage in &config.stages {
        let name = stage.name();
        let outcome = match stage {
            Stage::Ingest {
                adoptions,
                follows,
                reverse_edges,
                mutual_only,
                strict,
                time_unit,
                force,
            } => ingest(&IngestParams {
                adoptions: rebase(adoptions),
                follows: follows.as_deref().map(rebase),
                out: snapshot.clone(),
                reverse_edges: *reverse_edges,
                mutual_only: *mutual_only,
                strict: *strict,
                time_unit: *time_unit,
                force: *force,
            }),
            Stage::Thresholds {
                ties,
                popularity,
                density_of,
                bandwidth,
            } => thresholds(&ThresholdsParams {
                snapshot: snapshot.clone(),
                exposures_out: Some(out("exposures.tsv")),
                per_user_out: Some(out("thresholds.tsv")),
                density_out: Some(out("threshold_density.tsv")),
                density_of: *density_of,
                bandwidth: *bandwidth,
                ties: *ties,
                popularity: *popularity,
            }),
            Stage::Fit {
                measure,
                bootstrap,
                xmin,
                max_alpha,
            } => fit_powerlaw(&FitParams {
                snapshot: snapshot.clone(),
                measure: *measure,
                bootstrap: *bootstrap,
                seed,
                xmin: *xmin,
                max_alpha: *max_alpha,
                rank_out: Some(out("rank_frequency.tsv")),
                histogram_out: Some(out("popularity_histogram.tsv")),
            }),
            Stage::Correlate {
                bins,
                method,
                ties,
                popularity,
            } => correlate(&CorrelateParams {
                snapshot: snapshot.clone(),
                bins: *bins,
                method: *method,
                ties: *ties,
                popularity: *popularity,
                out: Some(out("correlation_bins.tsv")),
            }),
            Stage::Simulate { model, sim, runs } => simulate(
                &SimulateParams {
                    model: *model,
                    sim: sim.clone().rebased(&base),
                    runs: *runs,
                    seed,
                    out: runs_dir.clone(),
                },
                Vec::new(),
            ),
            Stage::Recover { runs } => {
                if let Some(r) = runs {
                    runs_dir = rebase(r);
                }
                recover(&RecoverParams {
                    runs: runs_dir.clone(),
                    out: Some(out("recovery_margins.tsv")),
                })
            }
        }
        .map_err(|e| e.in_stage(name))?;
        for d in &outcome.inputs {
            if !inputs.contains(d) {
                inputs.push(d.clone());
            }
        }
        stages.push(json!({
            "stage": name,
            "inputs": outcome.inputs,
            "config": outcome.config,
            "result": outcome.result,
        }));
    }

    Ok(Outcome {
        inputs,
        config: json!({
            "pipeline": config,
            "seed": seed,
            "seed_generated": seed_generated,
            "out_dir": out_dir.display().to_string(),
        }),
        result: json!({ "stages": Value::Array(stages) }),
    })
}
