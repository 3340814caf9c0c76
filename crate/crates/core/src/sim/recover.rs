//! Feeds simulated runs back through the measurement pipeline.
//!
//! Each run becomes one tag. Step `k` becomes time `k` seconds, the same
//! value an adoptions CSV with integer timestamps `k` ingests to, so
//! in-memory and file round trips produce the same dataset.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::SimRun;
use crate::error::{Error, Result};
use crate::event_model::{build_dataset, AdoptionRow, BuildOptions, Dataset, FollowRow, FollowerGraph};
use crate::exposure::{all_exposures, ExposureOptions};
use crate::stats::correlation::spearman;
use crate::time::Timestamp;

/// Milliseconds per simulation step.
pub const STEP_MS: i64 = 1000;

/// Tag label of run `index` in a batch of `total`.
pub fn run_tag_label(index: usize, total: usize) -> String {
    let width = total.saturating_sub(1).to_string().len();
    format!("t{index:0width$}")
}

/// Adoption rows of every run, run `i` under [`run_tag_label`]`(i, runs.len())`.
pub fn runs_to_rows(graph: &FollowerGraph, runs: &[SimRun]) -> Vec<AdoptionRow> {
    let mut rows = Vec::with_capacity(runs.iter().map(SimRun::adopters).sum());
    for (i, run) in runs.iter().enumerate() {
        let tag = run_tag_label(i, runs.len());
        rows.extend(run.adoptions.iter().map(|a| AdoptionRow {
            user: graph.label(a.user).to_owned(),
            tag: tag.clone(),
            time: Timestamp(i64::from(a.step) * STEP_MS),
        }));
    }
    rows
}

pub fn graph_rows(graph: &FollowerGraph) -> Vec<FollowRow> {
    graph
        .edges()
        .map(|(s, d)| FollowRow {
            src: graph.label(s).to_owned(),
            dst: graph.label(d).to_owned(),
            since: None,
        })
        .collect()
}

pub fn runs_to_dataset(graph: &FollowerGraph, runs: &[SimRun]) -> Result<Dataset> {
    Ok(build_dataset(runs_to_rows(graph, runs), graph_rows(graph), BuildOptions::default())?.0)
}

/// One non-seed adopter's measured exposure against their planted threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdopterMargin {
    pub run: usize,
    /// Graph handle.
    pub user: u32,
    pub step: u32,
    pub planted: f64,
    /// `None` if the adopter had no alters, which synchronous threshold
    /// runs never produce.
    pub measured: Option<f64>,
    pub tag_popularity_at_adoption: u64,
}

impl AdopterMargin {
    pub fn margin(&self) -> Option<f64> {
        self.measured.map(|m| m - self.planted)
    }

    pub fn is_violation(&self) -> bool {
        self.measured.is_none_or(|m| m < self.planted)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub runs: usize,
    /// Non-seed adopters compared.
    pub compared: usize,
    /// Adopters whose measured exposure falls below the planted threshold.
    pub violations: usize,
    pub min_margin: Option<f64>,
    pub mean_margin: Option<f64>,
    /// Rank correlation of popularity at adoption with exposure over the
    /// defined non-seed records; `None` when either series is constant.
    pub spearman_rho: Option<f64>,
    pub correlated_pairs: usize,
    /// In `(run, step, user)` order.
    pub margins: Vec<AdopterMargin>,
}

pub fn recover_thresholds(graph: &FollowerGraph, run: &SimRun) -> Result<RecoveryReport> {
    recover_batch(graph, std::slice::from_ref(run))
}

pub fn recover_batch(graph: &FollowerGraph, runs: &[SimRun]) -> Result<RecoveryReport> {
    check_planted(runs)?;
    recover_with_dataset(&runs_to_dataset(graph, runs)?, graph, runs)
}

fn check_planted(runs: &[SimRun]) -> Result<()> {
    match runs.iter().find(|r| r.thresholds.is_none()) {
        Some(r) => Err(Error::UnsupportedModel(format!(
            "{} runs carry no planted thresholds",
            r.model.kind().name()
        ))),
        None => Ok(()),
    }
}

/// Recovery against a dataset already holding the runs' adoptions, e.g. one
/// re-ingested from files. Tags must be labelled by [`run_tag_label`].
pub fn recover_with_dataset(d: &Dataset, graph: &FollowerGraph, runs: &[SimRun]) -> Result<RecoveryReport> {
    check_planted(runs)?;
    let run_of_tag: HashMap<String, usize> = (0..runs.len()).map(|i| (run_tag_label(i, runs.len()), i)).collect();
    let handle: HashMap<&str, u32> = graph.labels().iter().enumerate().map(|(i, l)| (l.as_str(), i as u32)).collect();
    let seed_sets: Vec<Vec<bool>> = runs
        .iter()
        .map(|r| {
            let mut is_seed = vec![false; r.users];
            for &s in &r.seeds {
                is_seed[s as usize] = true;
            }
            is_seed
        })
        .collect();

    let mut margins = Vec::new();
    for rec in all_exposures(d, ExposureOptions::default()).records {
        let tag = d.tag_label(rec.tag);
        let &run = run_of_tag.get(tag).ok_or_else(|| Error::UnknownTag(tag.to_owned()))?;
        let label = d.user_label(rec.user);
        let &user = handle.get(label).ok_or_else(|| Error::UnknownUser(label.to_owned()))?;
        if user as usize >= runs[run].users {
            return Err(Error::UnknownUser(label.to_owned()));
        }
        if seed_sets[run][user as usize] {
            continue;
        }
        let planted = runs[run].thresholds.as_ref().expect("checked")[user as usize];
        margins.push(AdopterMargin {
            run,
            user,
            step: u32::try_from(rec.time.0 / STEP_MS).unwrap_or(u32::MAX),
            planted,
            measured: rec.exposure,
            tag_popularity_at_adoption: rec.tag_popularity_at_adoption,
        });
    }
    margins.sort_by_key(|m| (m.run, m.step, m.user));

    let violations = margins.iter().filter(|m| m.is_violation()).count();
    let diffs: Vec<f64> = margins.iter().filter_map(AdopterMargin::margin).collect();
    let (pop, exp): (Vec<f64>, Vec<f64>) = margins
        .iter()
        .filter_map(|m| m.measured.map(|e| (m.tag_popularity_at_adoption as f64, e)))
        .unzip();
    let spearman_rho = if pop.len() >= 3 { spearman(&pop, &exp).ok() } else { None };
    Ok(RecoveryReport {
        runs: runs.len(),
        compared: margins.len(),
        violations,
        min_margin: diffs.iter().copied().reduce(f64::min),
        mean_margin: (!diffs.is_empty()).then(|| diffs.iter().sum::<f64>() / diffs.len() as f64),
        spearman_rho,
        correlated_pairs: pop.len(),
        margins,
    })
}
