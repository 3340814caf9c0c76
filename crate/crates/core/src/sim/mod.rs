//! Diffusion models on a static follower graph.
//!
//! All three models advance in synchronous steps. Seeds adopt at step 0. A
//! user's exposure at step `k` is the fraction of their alters that adopted
//! at or before step `k - 1`, computed with the same arithmetic the
//! measurement side uses, so a measured exposure can be compared exactly
//! against the threshold that triggered the adoption.
//!
//! Random draws happen in a fixed order from one generator per run: seed
//! users (if random), then one threshold per user in handle order, then one
//! uniform per edge.

pub mod graphgen;
pub mod recover;

use std::collections::HashMap;
use std::path::PathBuf;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event_model::{snapshot, FollowerGraph};
use crate::seed::derive_seed;

pub use graphgen::{gen_graph, GraphKind};
pub use recover::{
    recover_batch, recover_thresholds, recover_with_dataset, run_tag_label, runs_to_dataset, runs_to_rows,
    AdopterMargin, RecoveryReport,
};

/// Stream index used to derive a graph seed from the root seed.
const GRAPH_STREAM: u64 = u64::MAX;

/// Per-user threshold distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThresholdDist {
    /// Every user gets `value`. Values above 1 can never be reached.
    Constant { value: f64 },
    Uniform { low: f64, high: f64 },
    /// Normal restricted to `[0, 1]` by rejection.
    TruncatedNormal { mean: f64, sd: f64 },
}

impl ThresholdDist {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v.is_finite() && (0.0..=1.0).contains(&v);
        match *self {
            ThresholdDist::Constant { value } if value.is_finite() && value >= 0.0 => Ok(()),
            ThresholdDist::Constant { value } => Err(Error::invalid(format!("constant threshold {value} is negative"))),
            ThresholdDist::Uniform { low, high } if unit(low) && unit(high) && low <= high => Ok(()),
            ThresholdDist::Uniform { low, high } => {
                Err(Error::invalid(format!("uniform threshold bounds [{low}, {high}] must satisfy 0 <= low <= high <= 1")))
            }
            ThresholdDist::TruncatedNormal { mean, sd } if unit(mean) && sd > 0.0 && sd <= 10.0 => Ok(()),
            ThresholdDist::TruncatedNormal { mean, sd } => Err(Error::invalid(format!(
                "truncated normal needs mean in [0, 1] and sd in (0, 10], got mean={mean}, sd={sd}"
            ))),
        }
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            ThresholdDist::Constant { value } => value,
            ThresholdDist::Uniform { low, high } => rng.random_range(low..=high),
            ThresholdDist::TruncatedNormal { mean, sd } => {
                let normal = Normal::new(mean, sd).expect("validated");
                loop {
                    let v = normal.sample(rng);
                    if (0.0..=1.0).contains(&v) {
                        return v;
                    }
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdParams {
    pub theta: ThresholdDist,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeParams {
    /// Per-edge transmission probability.
    pub p: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearningParams {
    pub theta: ThresholdDist,
    /// Extra consecutive steps the exposure condition must hold before a
    /// user adopts.
    pub lag: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Threshold,
    Cascade,
    Learning,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Threshold => "threshold",
            ModelKind::Cascade => "cascade",
            ModelKind::Learning => "learning",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    Threshold(ThresholdParams),
    Cascade(CascadeParams),
    Learning(LearningParams),
}

impl ModelParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::Threshold(_) => ModelKind::Threshold,
            ModelParams::Cascade(_) => ModelKind::Cascade,
            ModelParams::Learning(_) => ModelKind::Learning,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelParams::Threshold(t) => t.theta.validate(),
            ModelParams::Learning(l) => l.theta.validate(),
            ModelParams::Cascade(c) if (0.0..=1.0).contains(&c.p) => Ok(()),
            ModelParams::Cascade(c) => Err(Error::invalid(format!("transmission probability {} outside [0, 1]", c.p))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeedSpec {
    /// `count` distinct users drawn uniformly.
    Random { count: usize },
    /// Users by label.
    Explicit { users: Vec<String> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum GraphSource {
    /// `seed = None` derives the graph seed from the run configuration's
    /// root seed.
    Generated { graph: GraphKind, seed: Option<u64> },
    /// Follower graph of a saved dataset; edge times are ignored.
    Snapshot { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub graph: GraphSource,
    pub seeds: SeedSpec,
    pub model: ModelParams,
    pub max_steps: u32,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_steps == 0 {
            return Err(Error::invalid("max_steps must be at least 1"));
        }
        match &self.seeds {
            SeedSpec::Random { count: 0 } => return Err(Error::invalid("seed set must be non-empty")),
            SeedSpec::Explicit { users } if users.is_empty() => {
                return Err(Error::invalid("seed set must be non-empty"))
            }
            _ => {}
        }
        if let GraphSource::Generated { graph, .. } = &self.graph {
            graph.validate()?;
        }
        self.model.validate()
    }

    /// Materialises the configured graph.
    pub fn build_graph(&self) -> Result<FollowerGraph> {
        match &self.graph {
            GraphSource::Generated { graph, seed } => {
                gen_graph(graph, seed.unwrap_or_else(|| derive_seed(self.seed, GRAPH_STREAM)))
            }
            GraphSource::Snapshot { path } => Ok(snapshot::load(path)?.follower_graph()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimAdoption {
    pub user: u32,
    pub step: u32,
}

/// Outcome of one simulated tag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimRun {
    pub model: ModelParams,
    /// Seed of this run's generator.
    pub seed: u64,
    pub users: usize,
    /// Seed users, ascending.
    pub seeds: Vec<u32>,
    /// Sorted by `(step, user)`; each user at most once.
    pub adoptions: Vec<SimAdoption>,
    /// Planted threshold per user handle; absent for the cascade model.
    pub thresholds: Option<Vec<f64>>,
    /// New adopters at each step from 0 to the last step with an adoption.
    pub new_per_step: Vec<usize>,
    /// Steps evaluated after step 0.
    pub steps_run: u32,
    /// Whether the run stopped at a fixed point rather than at `max_steps`.
    pub converged: bool,
    pub saturation: f64,
}

impl SimRun {
    pub fn adopters(&self) -> usize {
        self.adoptions.len()
    }

    /// Adoption step per user handle.
    pub fn adoption_steps(&self) -> Vec<Option<u32>> {
        let mut steps = vec![None; self.users];
        for a in &self.adoptions {
            steps[a.user as usize] = Some(a.step);
        }
        steps
    }
}

fn choose_seeds(graph: &FollowerGraph, spec: &SeedSpec, rng: &mut impl Rng) -> Result<Vec<u32>> {
    let n = graph.node_count();
    let mut seeds = match spec {
        SeedSpec::Random { count } => {
            if *count == 0 || *count > n {
                return Err(Error::invalid(format!("cannot draw {count} seed users from {n}")));
            }
            rand::seq::index::sample(rng, n, *count)
                .into_iter()
                .map(|i| i as u32)
                .collect::<Vec<_>>()
        }
        SeedSpec::Explicit { users } => {
            let index: HashMap<&str, u32> =
                graph.labels().iter().enumerate().map(|(i, l)| (l.as_str(), i as u32)).collect();
            let mut seeds = Vec::with_capacity(users.len());
            for label in users {
                let u = index.get(label.as_str()).ok_or_else(|| Error::UnknownUser(label.clone()))?;
                seeds.push(*u);
            }
            seeds
        }
    };
    if seeds.is_empty() {
        return Err(Error::invalid("seed set must be non-empty"));
    }
    seeds.sort_unstable();
    seeds.dedup();
    Ok(seeds)
}

/// Shared bookkeeping for the step loop.
struct Progress {
    step_of: Vec<u32>,
    adoptions: Vec<SimAdoption>,
    new_per_step: Vec<usize>,
}

const NOT_ADOPTED: u32 = u32::MAX;

impl Progress {
    fn new(n: usize, seeds: &[u32]) -> Self {
        let mut step_of = vec![NOT_ADOPTED; n];
        for &s in seeds {
            step_of[s as usize] = 0;
        }
        Self {
            step_of,
            adoptions: seeds.iter().map(|&user| SimAdoption { user, step: 0 }).collect(),
            new_per_step: vec![seeds.len()],
        }
    }

    fn adopted(&self, u: u32) -> bool {
        self.step_of[u as usize] != NOT_ADOPTED
    }

    /// Records `fresh` (ascending) as adopting at `step`.
    fn commit(&mut self, step: u32, fresh: &[u32]) {
        for &u in fresh {
            self.step_of[u as usize] = step;
            self.adoptions.push(SimAdoption { user: u, step });
        }
        if !fresh.is_empty() {
            self.new_per_step.resize(step as usize, 0);
            self.new_per_step.push(fresh.len());
        }
    }

    fn finish(self, model: ModelParams, seed: u64, seeds: Vec<u32>, thresholds: Option<Vec<f64>>, steps_run: u32, converged: bool) -> SimRun {
        let users = self.step_of.len();
        SimRun {
            model,
            seed,
            users,
            seeds,
            saturation: self.adoptions.len() as f64 / users as f64,
            adoptions: self.adoptions,
            thresholds,
            new_per_step: self.new_per_step,
            steps_run,
            converged,
        }
    }
}

/// Same arithmetic as the measured exposure.
fn exposure(active: u32, alters: usize) -> f64 {
    f64::from(active) / f64::from(alters as u32)
}

fn start(graph: &FollowerGraph, cfg: &SimConfig) -> Result<(ChaCha8Rng, Vec<u32>)> {
    cfg.validate()?;
    if graph.node_count() == 0 {
        return Err(Error::invalid("graph has no users"));
    }
    if graph.node_count() > u32::MAX as usize - 1 {
        return Err(Error::invalid("too many users"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let seeds = choose_seeds(graph, &cfg.seeds, &mut rng)?;
    Ok((rng, seeds))
}

fn draw_thresholds(n: usize, dist: &ThresholdDist, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| dist.sample(rng)).collect()
}

fn wrong_model(expected: ModelKind, cfg: &SimConfig) -> Error {
    Error::invalid(format!(
        "{} runner given a {} configuration",
        expected.name(),
        cfg.model.kind().name()
    ))
}

/// Linear threshold model: at step `k` every non-adopter whose exposure
/// from steps before `k` reaches their threshold adopts. Users without
/// alters adopt only as seeds.
pub fn run_threshold_model(graph: &FollowerGraph, cfg: &SimConfig) -> Result<SimRun> {
    let ModelParams::Threshold(params) = cfg.model else {
        return Err(wrong_model(ModelKind::Threshold, cfg));
    };
    let (mut rng, seeds) = start(graph, cfg)?;
    let n = graph.node_count();
    let theta = draw_thresholds(n, &params.theta, &mut rng);

    let mut progress = Progress::new(n, &seeds);
    let mut active = vec![0u32; n];
    let mut touched = vec![0u32; n];
    let mut fresh = seeds.clone();
    let mut candidates: Vec<u32> = (0..n as u32).collect();
    let mut steps_run = 0;
    let mut converged = false;
    for k in 1..=cfg.max_steps {
        steps_run = k;
        if k > 1 {
            candidates.clear();
        }
        for &v in &fresh {
            for &w in graph.observers(v) {
                active[w as usize] += 1;
                if k > 1 && touched[w as usize] != k {
                    touched[w as usize] = k;
                    candidates.push(w);
                }
            }
        }
        candidates.sort_unstable();
        fresh = candidates
            .iter()
            .copied()
            .filter(|&u| {
                let alters = graph.out_degree(u);
                !progress.adopted(u) && alters > 0 && exposure(active[u as usize], alters) >= theta[u as usize]
            })
            .collect();
        progress.commit(k, &fresh);
        if fresh.is_empty() {
            converged = true;
            break;
        }
    }
    Ok(progress.finish(cfg.model, cfg.seed, seeds, Some(theta), steps_run, converged))
}

/// Threshold adoption delayed by an evaluation window: a user adopts at the
/// step where the exposure condition has held for `lag + 1` consecutive
/// steps. `lag = 0` is the threshold model.
pub fn run_social_learning(graph: &FollowerGraph, cfg: &SimConfig) -> Result<SimRun> {
    let ModelParams::Learning(params) = cfg.model else {
        return Err(wrong_model(ModelKind::Learning, cfg));
    };
    let (mut rng, seeds) = start(graph, cfg)?;
    let n = graph.node_count();
    let theta = draw_thresholds(n, &params.theta, &mut rng);
    let needed = u64::from(params.lag) + 1;

    let mut progress = Progress::new(n, &seeds);
    let mut active = vec![0u32; n];
    let mut streak = vec![0u64; n];
    let mut fresh = seeds.clone();
    let mut steps_run = 0;
    let mut converged = false;
    for k in 1..=cfg.max_steps {
        steps_run = k;
        for &v in &fresh {
            for &w in graph.observers(v) {
                active[w as usize] += 1;
            }
        }
        fresh.clear();
        let mut pending = false;
        for u in 0..n as u32 {
            if progress.adopted(u) {
                continue;
            }
            let alters = graph.out_degree(u);
            let i = u as usize;
            if alters > 0 && exposure(active[i], alters) >= theta[i] {
                streak[i] += 1;
                if streak[i] >= needed {
                    fresh.push(u);
                } else {
                    pending = true;
                }
            } else {
                streak[i] = 0;
            }
        }
        progress.commit(k, &fresh);
        if fresh.is_empty() && !pending {
            converged = true;
            break;
        }
    }
    Ok(progress.finish(cfg.model, cfg.seed, seeds, Some(theta), steps_run, converged))
}

/// Independent cascade: a user adopting at step `k` gets one attempt on each
/// of their observers at step `k + 1`, succeeding when that edge's
/// pre-drawn uniform is below `p`. Runs that differ only in `p` share the
/// uniforms, so their adoption sets are nested.
pub fn run_independent_cascade(graph: &FollowerGraph, cfg: &SimConfig) -> Result<SimRun> {
    let ModelParams::Cascade(params) = cfg.model else {
        return Err(wrong_model(ModelKind::Cascade, cfg));
    };
    let (mut rng, seeds) = start(graph, cfg)?;
    let n = graph.node_count();
    // Indexed by position in the in-neighbour lists, target by target.
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0usize);
    for v in 0..n as u32 {
        offsets.push(offsets[v as usize] + graph.in_degree(v));
    }
    let uniforms: Vec<f64> = (0..graph.edge_count()).map(|_| rng.random::<f64>()).collect();

    let mut progress = Progress::new(n, &seeds);
    let mut claimed = vec![false; n];
    for &s in &seeds {
        claimed[s as usize] = true;
    }
    let mut fresh = seeds.clone();
    let mut steps_run = 0;
    let mut converged = false;
    for k in 1..=cfg.max_steps {
        steps_run = k;
        let mut next = Vec::new();
        for &v in &fresh {
            let base = offsets[v as usize];
            for (j, &w) in graph.observers(v).iter().enumerate() {
                if !claimed[w as usize] && uniforms[base + j] < params.p {
                    claimed[w as usize] = true;
                    next.push(w);
                }
            }
        }
        next.sort_unstable();
        progress.commit(k, &next);
        fresh = next;
        if fresh.is_empty() {
            converged = true;
            break;
        }
    }
    Ok(progress.finish(cfg.model, cfg.seed, seeds, None, steps_run, converged))
}

/// Dispatches on the configured model.
pub fn run_model(graph: &FollowerGraph, cfg: &SimConfig) -> Result<SimRun> {
    match cfg.model.kind() {
        ModelKind::Threshold => run_threshold_model(graph, cfg),
        ModelKind::Cascade => run_independent_cascade(graph, cfg),
        ModelKind::Learning => run_social_learning(graph, cfg),
    }
}

/// `runs` independent runs on one graph; run `i` uses
/// `derive_seed(cfg.seed, i)`, so the batch does not depend on scheduling.
pub fn run_batch(graph: &FollowerGraph, cfg: &SimConfig, runs: usize) -> Result<Vec<SimRun>> {
    cfg.validate()?;
    (0..runs as u64)
        .into_par_iter()
        .map(|i| {
            let cfg = SimConfig {
                seed: derive_seed(cfg.seed, i),
                ..cfg.clone()
            };
            run_model(graph, &cfg)
        })
        .collect()
}

#[cfg(test)]
mod tests;
