use std::path::PathBuf;

use cascade_core::event_model::DensityScope;
use cascade_core::exposure::{all_exposures, thresholds_from_records};
use cascade_core::stats::correlation::{popularity_threshold_correlation, CorrelationMethod};
use cascade_core::stats::curve::adoption_curve;
use cascade_core::stats::kde::smooth_distribution;
use cascade_core::stats::popularity::{histogram, rank_frequency, tag_popularity, PopularityMeasure};
use cascade_core::stats::powerlaw::{fit_power_law, PowerLawOptions, DEFAULT_MAX_ALPHA};
use cascade_core::time::parse_duration_ms;
use cascade_core::{Error as CoreError, ExposureOptions, PopularityMode, TieRule};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{default_bins, default_bootstrap, load_snapshot};
use crate::error::{CliError, CliResult};
use crate::report::Outcome;
use crate::tsv::{opt, TsvWriter};

/// Which threshold view the smoothed density describes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityOf {
    /// Per-user mean thresholds.
    #[default]
    Users,
    /// Exposure of every defined adoption.
    Adoptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdsParams {
    pub snapshot: PathBuf,
    #[serde(default)]
    pub exposures_out: Option<PathBuf>,
    #[serde(default)]
    pub per_user_out: Option<PathBuf>,
    #[serde(default)]
    pub density_out: Option<PathBuf>,
    #[serde(default)]
    pub density_of: DensityOf,
    #[serde(default)]
    pub bandwidth: Option<f64>,
    #[serde(default)]
    pub ties: TieRule,
    #[serde(default)]
    pub popularity: PopularityMode,
}

pub fn thresholds(p: &ThresholdsParams) -> CliResult<Outcome> {
    let (d, digest) = load_snapshot(&p.snapshot)?;
    let opts = ExposureOptions {
        ties: p.ties,
        popularity: p.popularity,
    };
    let batch = all_exposures(&d, opts);
    let population = thresholds_from_records(d.counts().users, &batch.records);

    if let Some(path) = &p.exposures_out {
        let mut w = TsvWriter::create(
            path,
            &["user", "tag", "time", "active_alters", "neighborhood_size", "exposure", "tag_popularity_at_adoption"],
        )?;
        for r in &batch.records {
            w.row(&[
                d.user_label(r.user).to_owned(),
                d.tag_label(r.tag).to_owned(),
                r.time.0.to_string(),
                r.active_alters.to_string(),
                r.neighborhood_size.to_string(),
                opt(r.exposure),
                r.tag_popularity_at_adoption.to_string(),
            ])?;
        }
        w.finish()?;
    }
    if let Some(path) = &p.per_user_out {
        let mut w = TsvWriter::create(path, &["user", "beta", "defined_adoptions", "undefined_adoptions"])?;
        for t in &population.per_user {
            w.row(&[
                d.user_label(t.user).to_owned(),
                t.beta.to_string(),
                t.defined_adoptions.to_string(),
                t.undefined_adoptions.to_string(),
            ])?;
        }
        w.finish()?;
    }
    let density = match &p.density_out {
        None => None,
        Some(path) => {
            let values: Vec<f64> = match p.density_of {
                DensityOf::Users => population.per_user.iter().map(|t| t.beta).collect(),
                DensityOf::Adoptions => batch.records.iter().filter_map(|r| r.exposure).collect(),
            };
            let curve = smooth_distribution(&values, p.bandwidth)?;
            let mut w = TsvWriter::create(path, &["x", "density"])?;
            for (x, y) in curve.xs.iter().zip(&curve.density) {
                w.row(&[x.to_string(), y.to_string()])?;
            }
            w.finish()?;
            Some(json!({ "of": p.density_of, "bandwidth": curve.bandwidth, "points": curve.xs.len() }))
        }
    };

    Ok(Outcome {
        inputs: vec![digest],
        config: serde_json::to_value(p)?,
        result: json!({
            "records": batch.records.len(),
            "defined": batch.defined,
            "undefined": batch.undefined,
            "users_with_threshold": population.per_user.len(),
            "excluded_users": population.excluded_users,
            "per_user": population.per_user_summary,
            "per_adoption": population.per_adoption_summary,
            "density": density,
        }),
    })
}

fn default_max_alpha() -> Option<f64> {
    Some(DEFAULT_MAX_ALPHA)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitParams {
    pub snapshot: PathBuf,
    #[serde(default)]
    pub measure: PopularityMeasure,
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
    pub seed: u64,
    /// Fixed cutoff; scanned when absent.
    #[serde(default)]
    pub xmin: Option<u64>,
    /// Upper end of the exponent search; `null` searches without a cap.
    #[serde(default = "default_max_alpha")]
    pub max_alpha: Option<f64>,
    #[serde(default)]
    pub rank_out: Option<PathBuf>,
    #[serde(default)]
    pub histogram_out: Option<PathBuf>,
}

pub fn fit_powerlaw(p: &FitParams) -> CliResult<Outcome> {
    let (d, digest) = load_snapshot(&p.snapshot)?;
    let table = tag_popularity(&d);
    if let Some(path) = &p.rank_out {
        let mut w = TsvWriter::create(path, &["rank", "tag", "count"])?;
        for e in rank_frequency(&table, p.measure) {
            w.row(&[e.rank.to_string(), d.tag_label(e.tag).to_owned(), e.count.to_string()])?;
        }
        w.finish()?;
    }
    if let Some(path) = &p.histogram_out {
        let mut w = TsvWriter::create(path, &["count", "tags"])?;
        for (value, tags) in histogram(&table, p.measure) {
            w.row(&[value.to_string(), tags.to_string()])?;
        }
        w.finish()?;
    }
    let samples: Vec<u64> = table.iter().map(|t| t.get(p.measure)).collect();
    let fit = fit_power_law(
        &samples,
        PowerLawOptions {
            bootstrap: p.bootstrap,
            seed: p.seed,
            xmin: p.xmin,
            max_alpha: p.max_alpha,
        },
    )?;
    Ok(Outcome {
        inputs: vec![digest],
        config: serde_json::to_value(p)?,
        result: json!({ "tags": table.len(), "fit": fit }),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveParams {
    pub snapshot: PathBuf,
    pub tag: String,
    /// Bucket width, e.g. `1h`, `30m`, `86400` (seconds).
    pub bucket: String,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

pub fn curve(p: &CurveParams) -> CliResult<Outcome> {
    let bucket_ms = parse_duration_ms(&p.bucket)
        .filter(|&ms| ms > 0)
        .ok_or_else(|| CliError::Usage(format!("invalid bucket width {:?}", p.bucket)))?;
    let (d, digest) = load_snapshot(&p.snapshot)?;
    let x = d.tag_id(&p.tag).ok_or_else(|| CliError::from(CoreError::UnknownTag(p.tag.clone())))?;
    let c = adoption_curve(&d, x, bucket_ms)?;
    if let Some(path) = &p.out {
        let mut w = TsvWriter::create(
            path,
            &["time", "new_first_usages", "cumulative_first_usages", "subsequent_usages", "saturation"],
        )?;
        for pt in &c.points {
            w.row(&[
                pt.time.0.to_string(),
                pt.new_first_usages.to_string(),
                pt.cumulative_first_usages.to_string(),
                pt.subsequent_usages.to_string(),
                pt.saturation.to_string(),
            ])?;
        }
        w.finish()?;
    }
    let last = c.points.last().expect("curves are non-empty");
    Ok(Outcome {
        inputs: vec![digest],
        config: serde_json::to_value(p)?,
        result: json!({
            "tag": p.tag,
            "bucket_ms": bucket_ms,
            "points": c.points.len(),
            "first_time": c.points[0].time,
            "adopters": last.cumulative_first_usages,
            "final_saturation": last.saturation,
        }),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelateParams {
    pub snapshot: PathBuf,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default)]
    pub method: CorrelationMethod,
    #[serde(default)]
    pub ties: TieRule,
    #[serde(default)]
    pub popularity: PopularityMode,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

pub fn correlate(p: &CorrelateParams) -> CliResult<Outcome> {
    let (d, digest) = load_snapshot(&p.snapshot)?;
    let opts = ExposureOptions {
        ties: p.ties,
        popularity: p.popularity,
    };
    let records = all_exposures(&d, opts).records;
    let report = popularity_threshold_correlation(&records, p.bins, p.method)?;
    if let Some(path) = &p.out {
        let mut w = TsvWriter::create(path, &["lower", "upper", "count", "mean_exposure"])?;
        for b in &report.bins {
            w.row(&[b.lower.to_string(), b.upper.to_string(), b.count.to_string(), opt(b.mean_exposure)])?;
        }
        w.finish()?;
    }
    Ok(Outcome {
        inputs: vec![digest],
        config: serde_json::to_value(p)?,
        result: serde_json::to_value(&report)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsParams {
    pub snapshot: PathBuf,
}

pub fn stats(p: &StatsParams) -> CliResult<Outcome> {
    let (d, digest) = load_snapshot(&p.snapshot)?;
    let giant = d.giant_component();
    let density = |scope| d.density(scope).ok();
    let times = d.events();
    Ok(Outcome {
        inputs: vec![digest],
        config: serde_json::to_value(p)?,
        result: json!({
            "counts": d.counts(),
            "giant_component_users": giant.len(),
            "density": density(DensityScope::All),
            "giant_component_density": density(DensityScope::GiantComponent),
            "timed_edges": d.edges().iter().filter(|e| e.since.is_some()).count(),
            "first_event": times.first().map(|e| e.time),
            "last_event": times.last().map(|e| e.time),
        }),
    })
}
