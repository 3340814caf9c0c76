//! Test-only oracles, independent of the library's own code paths.

#![allow(dead_code)]

use rand::Rng;

/// Discrete power law on `[xmin, ∞)` sampled by inverting an explicitly
/// summed CDF table (no zeta function involved). Mass beyond the table is
/// drawn from the rounded continuous law.
pub struct InverseCdfPowerLaw {
    xmin: u64,
    alpha: f64,
    cdf: Vec<f64>,
}

impl InverseCdfPowerLaw {
    pub fn new(alpha: f64, xmin: u64, table_len: usize) -> Self {
        let weights: Vec<f64> = (0..table_len).map(|k| ((xmin + k as u64) as f64).powf(-alpha)).collect();
        let upper = (xmin + table_len as u64) as f64 - 0.5;
        let tail_mass = upper.powf(1.0 - alpha) / (alpha - 1.0);
        let total: f64 = weights.iter().rev().sum::<f64>() + tail_mass;
        let mut acc = 0.0;
        let cdf = weights
            .iter()
            .map(|w| {
                acc += w / total;
                acc
            })
            .collect();
        Self { xmin, alpha, cdf }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random();
        let idx = self.cdf.partition_point(|&c| c <= u);
        if idx < self.cdf.len() {
            return self.xmin + idx as u64;
        }
        let start = (self.xmin + self.cdf.len() as u64) as f64 - 0.5;
        let v: f64 = rng.random();
        (start * (1.0 - v).powf(-1.0 / (self.alpha - 1.0)) + 0.5).floor() as u64
    }
}

/// Geometric on {1, 2, …} with success probability `p`, by inversion.
pub fn geometric<R: Rng>(rng: &mut R, p: f64) -> u64 {
    let u: f64 = rng.random();
    1 + ((1.0 - u).ln() / (1.0 - p).ln()).floor() as u64
}

use std::collections::{BTreeMap, BTreeSet, HashMap};

use cascade_core::{AdoptionRow, FollowRow, Timestamp};

/// What the oracle derives for one first usage, as exact integers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleRecord {
    pub time: i64,
    pub active: u32,
    pub size: u32,
    pub prior_adopters: u64,
    pub prior_usages: u64,
}

/// Rescans the raw rows for every first usage. Keys are `(user, tag)` labels.
pub fn exposure_oracle(
    adoptions: &[AdoptionRow],
    follows: &[FollowRow],
    inclusive_ties: bool,
) -> BTreeMap<(String, String), OracleRecord> {
    let first = |u: &str, x: &str| -> Option<i64> {
        adoptions.iter().filter(|r| r.user == u && r.tag == x).map(|r| r.time.0).min()
    };
    let mut out = BTreeMap::new();
    let pairs: BTreeSet<(&str, &str)> = adoptions.iter().map(|r| (r.user.as_str(), r.tag.as_str())).collect();
    for (u, x) in pairs {
        let tau = first(u, x).unwrap();
        // Earliest presence of each alter; an untimestamped row means always.
        let mut alters: HashMap<&str, Option<i64>> = HashMap::new();
        for f in follows.iter().filter(|f| f.src == u && f.dst != u) {
            let since = f.since.map(|t| t.0);
            alters
                .entry(f.dst.as_str())
                .and_modify(|s| {
                    *s = match (*s, since) {
                        (None, _) | (_, None) => None,
                        (Some(a), Some(b)) => Some(a.min(b)),
                    }
                })
                .or_insert(since);
        }
        let mut size = 0;
        let mut active = 0;
        for (v, since) in alters {
            if since.is_some_and(|s| s > tau) {
                continue;
            }
            size += 1;
            if let Some(tv) = first(v, x) {
                if tv < tau || (inclusive_ties && tv == tau) {
                    active += 1;
                }
            }
        }
        let adopters: BTreeSet<&str> =
            adoptions.iter().filter(|r| r.tag == x && r.time.0 < tau).map(|r| r.user.as_str()).collect();
        let prior_usages = adoptions.iter().filter(|r| r.tag == x && r.time.0 < tau).count() as u64;
        out.insert(
            (u.to_owned(), x.to_owned()),
            OracleRecord {
                time: tau,
                active,
                size,
                prior_adopters: adopters.len() as u64,
                prior_usages,
            },
        );
    }
    out
}

/// Random micro-dataset: at most 30 users, 10 tags and 200 usage rows, with
/// timestamps from a narrow range so ties are common. Follow rows may repeat,
/// loop on themselves and carry times.
pub fn micro_dataset<R: Rng>(rng: &mut R) -> (Vec<AdoptionRow>, Vec<FollowRow>) {
    let users = rng.random_range(1..=30usize);
    let tags = rng.random_range(1..=10usize);
    let events = rng.random_range(0..=200usize);
    let horizon = rng.random_range(1..=25i64);
    let adoptions = (0..events)
        .map(|_| AdoptionRow {
            user: format!("user{}", rng.random_range(0..users)),
            tag: format!("tag{}", rng.random_range(0..tags)),
            time: Timestamp(rng.random_range(0..horizon)),
        })
        .collect();
    let edge_p = rng.random_range(0.0..0.4);
    let timed = rng.random_bool(0.5);
    let mut follows = Vec::new();
    for s in 0..users {
        for d in 0..users {
            if rng.random_bool(edge_p) && (s != d || rng.random_bool(0.2)) {
                follows.push(FollowRow {
                    src: format!("user{s}"),
                    dst: format!("user{d}"),
                    since: (timed && rng.random_bool(0.7)).then(|| Timestamp(rng.random_range(0..horizon))),
                });
            }
        }
    }
    (adoptions, follows)
}
