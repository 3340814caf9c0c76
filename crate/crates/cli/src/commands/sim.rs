use std::collections::HashMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use cascade_core::event_model::io::{read_adoptions, read_follows, write_adoptions, write_follows, ReadOptions, RowPolicy};
use cascade_core::sim::{
    recover_with_dataset, run_batch, run_tag_label, GraphSource, LearningParams, CascadeParams, ModelKind,
    ModelParams, SeedSpec, SimConfig, SimRun, ThresholdDist, ThresholdParams,
};
use cascade_core::{build_dataset, BuildOptions, FollowerGraph};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{CliError, CliResult, Context};
use crate::report::{digest_file, write_json, InputDigest, Outcome, TOOL, VERSION};
use crate::tsv::{opt, TsvWriter};

pub const MANIFEST_FILE: &str = "manifest.json";
const FOLLOWS_FILE: &str = "follows.csv";

fn default_max_steps() -> u32 {
    1000
}

/// Simulation settings as written in a `sim.json` file. One file can carry
/// the parameters of all three models; the model is chosen separately.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimFile {
    pub graph: GraphSource,
    pub seeds: SeedSpec,
    #[serde(default = "default_max_steps")]
    pub max_steps: u32,
    /// Threshold distribution for the threshold and learning models.
    #[serde(default)]
    pub theta: Option<ThresholdDist>,
    /// Transmission probability for the cascade model.
    #[serde(default)]
    pub p: Option<f64>,
    /// Evaluation lag for the learning model.
    #[serde(default)]
    pub lag: Option<u32>,
}

impl SimFile {
    pub fn model_params(&self, kind: ModelKind) -> CliResult<ModelParams> {
        let missing = |field: &str| CliError::Usage(format!("the {} model needs `{field}` in the simulation config", kind.name()));
        Ok(match kind {
            ModelKind::Threshold => ModelParams::Threshold(ThresholdParams {
                theta: self.theta.ok_or_else(|| missing("theta"))?,
            }),
            ModelKind::Cascade => ModelParams::Cascade(CascadeParams {
                p: self.p.ok_or_else(|| missing("p"))?,
            }),
            ModelKind::Learning => ModelParams::Learning(LearningParams {
                theta: self.theta.ok_or_else(|| missing("theta"))?,
                lag: self.lag.ok_or_else(|| missing("lag"))?,
            }),
        })
    }

    /// Resolves a relative snapshot path against `base`.
    pub fn rebased(mut self, base: &Path) -> Self {
        if let GraphSource::Snapshot { path } = &mut self.graph {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateParams {
    pub model: ModelKind,
    pub sim: SimFile,
    pub runs: usize,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestRun {
    pub tag: String,
    pub file: String,
    pub run: SimRun,
}

/// Everything needed to re-ingest and re-check a batch of runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub model: ModelKind,
    pub config: SimConfig,
    /// Graph labels in handle order.
    pub users: Vec<String>,
    pub edges: usize,
    pub follows: String,
    pub runs: Vec<ManifestRun>,
}

pub fn simulate(p: &SimulateParams, mut inputs: Vec<InputDigest>) -> CliResult<Outcome> {
    if p.runs == 0 {
        return Err(CliError::Usage("--runs must be at least 1".into()));
    }
    let cfg = SimConfig {
        graph: p.sim.graph.clone(),
        seeds: p.sim.seeds.clone(),
        model: p.sim.model_params(p.model)?,
        max_steps: p.sim.max_steps,
        seed: p.seed,
    };
    cfg.validate()?;
    if let GraphSource::Snapshot { path } = &cfg.graph {
        inputs.push(digest_file(path)?);
    }
    let graph = match &cfg.graph {
        GraphSource::Snapshot { path } => cfg.build_graph().at(path)?,
        GraphSource::Generated { .. } => cfg.build_graph()?,
    };
    let runs = run_batch(&graph, &cfg, p.runs)?;

    fs::create_dir_all(&p.out).at(&p.out)?;
    let follows_path = p.out.join(FOLLOWS_FILE);
    let labelled = graph.edges().map(|(s, d)| (graph.label(s), graph.label(d)));
    write_follows(BufWriter::new(File::create(&follows_path).at(&follows_path)?), labelled).at(&follows_path)?;

    let mut entries = Vec::with_capacity(runs.len());
    for (i, run) in runs.into_iter().enumerate() {
        let tag = run_tag_label(i, p.runs);
        let file = format!("{tag}.csv");
        let path = p.out.join(&file);
        let rows = run
            .adoptions
            .iter()
            .map(|a| (graph.label(a.user), tag.as_str(), i64::from(a.step)));
        write_adoptions(BufWriter::new(File::create(&path).at(&path)?), rows).at(&path)?;
        entries.push(ManifestRun { tag, file, run });
    }

    let saturations: Vec<f64> = entries.iter().map(|e| e.run.saturation).collect();
    let adopters: usize = entries.iter().map(|e| e.run.adopters()).sum();
    let result = json!({
        "runs": entries.len(),
        "graph": { "users": graph.node_count(), "edges": graph.edge_count() },
        "mean_saturation": saturations.iter().sum::<f64>() / saturations.len() as f64,
        "min_saturation": saturations.iter().copied().fold(f64::INFINITY, f64::min),
        "max_saturation": saturations.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        "total_adopters": adopters,
        "converged_runs": entries.iter().filter(|e| e.run.converged).count(),
        "manifest": p.out.join(MANIFEST_FILE).display().to_string(),
    });
    let manifest = Manifest {
        tool: TOOL.into(),
        version: VERSION.into(),
        model: p.model,
        config: cfg.clone(),
        users: graph.labels().to_vec(),
        edges: graph.edge_count(),
        follows: FOLLOWS_FILE.into(),
        runs: entries,
    };
    let manifest_path = p.out.join(MANIFEST_FILE);
    write_json(&manifest_path, &manifest)?;

    Ok(Outcome {
        inputs,
        config: json!({ "params": p, "resolved": cfg }),
        result,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoverParams {
    /// Directory written by `simulate`.
    pub runs: PathBuf,
    /// Per-adopter margins as TSV.
    #[serde(default)]
    pub out: Option<PathBuf>,
}

pub fn read_manifest(path: &Path) -> CliResult<Manifest> {
    let text = fs::read_to_string(path).at(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn recover(p: &RecoverParams) -> CliResult<Outcome> {
    let manifest_path = p.runs.join(MANIFEST_FILE);
    let mut inputs = vec![digest_file(&manifest_path)?];
    let manifest = read_manifest(&manifest_path)?;
    let strict = ReadOptions {
        policy: RowPolicy::Strict,
        ..ReadOptions::default()
    };

    let follows_path = p.runs.join(&manifest.follows);
    inputs.push(digest_file(&follows_path)?);
    let follows = read_follows(File::open(&follows_path).at(&follows_path)?, strict).at(&follows_path)?.rows;
    let handle: HashMap<&str, u32> = manifest.users.iter().enumerate().map(|(i, l)| (l.as_str(), i as u32)).collect();
    let mut edges = Vec::with_capacity(follows.len());
    for f in &follows {
        match (handle.get(f.src.as_str()), handle.get(f.dst.as_str())) {
            (Some(&s), Some(&d)) => edges.push((s, d)),
            _ => return Err(CliError::Data(format!("{}: edge {} -> {} names an unknown user", follows_path.display(), f.src, f.dst))),
        }
    }
    let graph = FollowerGraph::new(manifest.users.clone(), edges).at(&follows_path)?;

    let total = manifest.runs.len();
    let mut rows = Vec::new();
    for (i, entry) in manifest.runs.iter().enumerate() {
        if entry.tag != run_tag_label(i, total) {
            return Err(CliError::Data(format!("{}: run {i} is labelled {:?}", manifest_path.display(), entry.tag)));
        }
        let path = p.runs.join(&entry.file);
        inputs.push(digest_file(&path)?);
        rows.extend(read_adoptions(File::open(&path).at(&path)?, strict).at(&path)?.rows);
    }
    let (d, _) = build_dataset(rows, follows, BuildOptions::default())?;
    let runs: Vec<SimRun> = manifest.runs.iter().map(|e| e.run.clone()).collect();
    let report = recover_with_dataset(&d, &graph, &runs)?;

    if let Some(path) = &p.out {
        let mut w = TsvWriter::create(
            path,
            &["tag", "user", "step", "planted", "measured", "margin", "tag_popularity_at_adoption"],
        )?;
        for m in &report.margins {
            w.row(&[
                manifest.runs[m.run].tag.clone(),
                graph.label(m.user).to_owned(),
                m.step.to_string(),
                m.planted.to_string(),
                opt(m.measured),
                opt(m.margin()),
                m.tag_popularity_at_adoption.to_string(),
            ])?;
        }
        w.finish()?;
    }

    let mut result = serde_json::to_value(&report)?;
    result.as_object_mut().expect("object").remove("margins");
    result["model"] = json!(manifest.model);
    Ok(Outcome {
        inputs,
        config: serde_json::to_value(p)?,
        result,
    })
}
