//! Popularity-at-adoption versus exposure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exposure::ExposureRecord;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationMethod {
    #[default]
    Spearman,
    Pearson,
}

/// One logarithmic popularity bin, `[lower, upper)` (the last bin is closed).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopularityBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub mean_exposure: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub method: CorrelationMethod,
    pub rho: f64,
    pub n_pairs: usize,
    pub bins: Vec<PopularityBin>,
}

/// 1-based ranks; tied values share the mean of their ranks.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::invalid("paired series differ in length"));
    }
    if x.len() < 3 {
        return Err(Error::TooFewValues {
            needed: 3,
            got: x.len(),
        });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 {
        return Err(Error::UndefinedCorrelation("first series is constant".into()));
    }
    if syy == 0.0 {
        return Err(Error::UndefinedCorrelation("second series is constant".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::invalid("paired series differ in length"));
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Correlates popularity at adoption with exposure over the defined records
/// and bins exposure by `ln(1 + popularity)` into `bins` equal-width bins.
pub fn popularity_threshold_correlation(
    records: &[ExposureRecord],
    bins: usize,
    method: CorrelationMethod,
) -> Result<CorrelationReport> {
    if bins == 0 {
        return Err(Error::invalid("need at least one bin"));
    }
    let (pop, exposure): (Vec<f64>, Vec<f64>) = records
        .iter()
        .filter_map(|r| r.exposure.map(|e| (r.tag_popularity_at_adoption as f64, e)))
        .unzip();
    if pop.len() < 3 {
        return Err(Error::TooFewValues {
            needed: 3,
            got: pop.len(),
        });
    }
    let rho = match method {
        CorrelationMethod::Spearman => spearman(&pop, &exposure)?,
        CorrelationMethod::Pearson => pearson(&pop, &exposure)?,
    };

    let logs: Vec<f64> = pop.iter().map(|p| p.ln_1p()).collect();
    let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let mut sums = vec![0.0f64; bins];
    let mut counts = vec![0usize; bins];
    for (l, e) in logs.iter().zip(&exposure) {
        let b = (((l - lo) / width) as usize).min(bins - 1);
        sums[b] += e;
        counts[b] += 1;
    }
    let edge = |k: usize| if k == bins { hi.exp_m1() } else { (lo + k as f64 * width).exp_m1() };
    let bins = (0..bins)
        .map(|k| PopularityBin {
            lower: edge(k),
            upper: edge(k + 1),
            count: counts[k],
            mean_exposure: (counts[k] > 0).then(|| sums[k] / counts[k] as f64),
        })
        .collect();
    Ok(CorrelationReport {
        method,
        rho,
        n_pairs: pop.len(),
        bins,
    })
}
