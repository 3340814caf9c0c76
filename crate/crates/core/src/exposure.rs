//! Network exposure at each adoption and per-user mean adoption thresholds.
//!
//! For a first usage of tag `x` by ego `u` at time `τ`, the exposure is the
//! fraction of `u`'s alters at `τ` whose own first usage of `x` came before
//! `τ`. An ego with no alters at `τ` has undefined exposure; such adoptions
//! are counted but excluded from the per-user mean.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event_model::{Dataset, TagId, UserId};
use crate::stats::summary::Summary;
use crate::time::Timestamp;

/// Whether an alter adopting at exactly the ego's adoption time counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieRule {
    /// Only alters adopting strictly before the ego.
    #[default]
    Strict,
    /// Alters adopting at the same instant also count.
    Inclusive,
}

/// What "popularity at adoption" counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PopularityMode {
    /// Distinct users whose first usage precedes the adoption.
    #[default]
    Adopters,
    /// Usages of any kind preceding the adoption.
    Usages,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExposureOptions {
    pub ties: TieRule,
    pub popularity: PopularityMode,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExposureRecord {
    pub user: UserId,
    pub tag: TagId,
    pub time: Timestamp,
    pub active_alters: u32,
    pub neighborhood_size: u32,
    /// `None` when `neighborhood_size == 0`.
    pub exposure: Option<f64>,
    /// Always counted strictly before `time`, whatever the tie rule.
    pub tag_popularity_at_adoption: u64,
}

impl ExposureRecord {
    pub fn is_defined(&self) -> bool {
        self.exposure.is_some()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserThreshold {
    pub user: UserId,
    pub beta: f64,
    pub defined_adoptions: usize,
    pub undefined_adoptions: usize,
}

fn record_at(d: &Dataset, u: UserId, x: TagId, tau: Timestamp, opts: ExposureOptions) -> ExposureRecord {
    let mut size = 0u32;
    let mut active = 0u32;
    for edge in d.out_edges(u) {
        if !edge.present_at(tau) {
            continue;
        }
        size += 1;
        if let Some(t) = d.first_usage_time(edge.dst, x) {
            let counts = match opts.ties {
                TieRule::Strict => t < tau,
                TieRule::Inclusive => t <= tau,
            };
            active += u32::from(counts);
        }
    }
    let prior = match opts.popularity {
        PopularityMode::Adopters => d.tag_first_times(x),
        PopularityMode::Usages => d.tag_usage_times(x),
    };
    ExposureRecord {
        user: u,
        tag: x,
        time: tau,
        active_alters: active,
        neighborhood_size: size,
        exposure: (size > 0).then(|| f64::from(active) / f64::from(size)),
        tag_popularity_at_adoption: prior.partition_point(|&t| t < tau) as u64,
    }
}

pub fn exposure_at_adoption(d: &Dataset, u: UserId, x: TagId, opts: ExposureOptions) -> Result<ExposureRecord> {
    let tau = d.first_usage_time(u, x).ok_or_else(|| Error::NoAdoption {
        user: d.user_label(u).to_owned(),
        tag: d.tag_label(x).to_owned(),
    })?;
    Ok(record_at(d, u, x, tau, opts))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExposureBatch {
    /// One record per first usage, in `(time, user, tag)` order.
    pub records: Vec<ExposureRecord>,
    pub defined: usize,
    pub undefined: usize,
}

pub fn all_exposures(d: &Dataset, opts: ExposureOptions) -> ExposureBatch {
    let firsts: Vec<_> = d.first_usages().collect();
    let records: Vec<ExposureRecord> = firsts
        .par_iter()
        .map(|e| record_at(d, e.user, e.tag, e.time, opts))
        .collect();
    let defined = records.iter().filter(|r| r.is_defined()).count();
    ExposureBatch {
        undefined: records.len() - defined,
        defined,
        records,
    }
}

#[derive(Clone, Copy, Default)]
struct Accumulator {
    sum: f64,
    defined: usize,
    undefined: usize,
}

impl Accumulator {
    fn add(&mut self, r: &ExposureRecord) {
        match r.exposure {
            Some(e) => {
                self.sum += e;
                self.defined += 1;
            }
            None => self.undefined += 1,
        }
    }

    fn finish(self, user: UserId) -> Option<UserThreshold> {
        (self.defined > 0).then(|| UserThreshold {
            user,
            beta: self.sum / self.defined as f64,
            defined_adoptions: self.defined,
            undefined_adoptions: self.undefined,
        })
    }
}

/// Mean exposure over `u`'s adoptions with a non-empty neighbourhood.
pub fn user_threshold(d: &Dataset, u: UserId, opts: ExposureOptions) -> Result<UserThreshold> {
    let mut firsts: Vec<(Timestamp, TagId)> = d.first_usages_of(u).iter().map(|&(x, t)| (t, x)).collect();
    // Same summation order as the batch path: (time, tag) within a user.
    firsts.sort_unstable();
    let mut acc = Accumulator::default();
    for (t, x) in firsts {
        acc.add(&record_at(d, u, x, t, opts));
    }
    acc.finish(u).ok_or_else(|| Error::UndefinedThreshold {
        user: d.user_label(u).to_owned(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPopulation {
    /// Users with at least one defined adoption, in handle order.
    pub per_user: Vec<UserThreshold>,
    /// Distribution of `beta` over `per_user`.
    pub per_user_summary: Option<Summary>,
    /// Distribution of exposure over all defined adoption records.
    pub per_adoption_summary: Option<Summary>,
    /// Users with adoptions but none defined.
    pub excluded_users: usize,
}

pub fn population_thresholds(d: &Dataset, opts: ExposureOptions) -> ThresholdPopulation {
    thresholds_from_records(d.counts().users, &all_exposures(d, opts).records)
}

/// Aggregates batch records (in batch order) into per-user thresholds.
pub fn thresholds_from_records(n_users: usize, records: &[ExposureRecord]) -> ThresholdPopulation {
    let mut acc = vec![Accumulator::default(); n_users];
    for r in records {
        acc[r.user.index()].add(r);
    }
    let mut excluded_users = 0;
    let mut per_user = Vec::new();
    for (i, a) in acc.into_iter().enumerate() {
        match a.finish(UserId(i as u32)) {
            Some(t) => per_user.push(t),
            None if a.undefined > 0 => excluded_users += 1,
            None => {}
        }
    }
    let betas: Vec<f64> = per_user.iter().map(|t| t.beta).collect();
    let exposures: Vec<f64> = records.iter().filter_map(|r| r.exposure).collect();
    ThresholdPopulation {
        per_user_summary: Summary::of(&betas),
        per_adoption_summary: Summary::of(&exposures),
        per_user,
        excluded_users,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event_model::{build_dataset, AdoptionRow, BuildOptions, FollowRow};

    fn dataset(adoptions: &[(&str, &str, i64)], follows: &[(&str, &str)]) -> Dataset {
        let a = adoptions.iter().map(|&(u, x, t)| AdoptionRow {
            user: u.into(),
            tag: x.into(),
            time: Timestamp(t),
        });
        let f = follows.iter().map(|&(s, d)| FollowRow {
            src: s.into(),
            dst: d.into(),
            since: None,
        });
        build_dataset(a, f, BuildOptions::default()).unwrap().0
    }

    /// A observes {B, C, D}; first usages of t: B@1, C@2, A@4, D@5.
    fn worked_example() -> Dataset {
        dataset(
            &[("B", "t", 1), ("C", "t", 2), ("A", "t", 4), ("D", "t", 5)],
            &[("A", "B"), ("A", "C"), ("A", "D")],
        )
    }

    fn id(d: &Dataset, u: &str) -> UserId {
        d.user_id(u).unwrap()
    }

    #[test]
    fn worked_example_exposure() {
        let d = worked_example();
        let t = d.tag_id("t").unwrap();
        let r = exposure_at_adoption(&d, id(&d, "A"), t, ExposureOptions::default()).unwrap();
        assert_eq!(r.active_alters, 2);
        assert_eq!(r.neighborhood_size, 3);
        assert_eq!(r.exposure, Some(2.0 / 3.0));
        assert_eq!(r.tag_popularity_at_adoption, 2);
        assert_eq!(r.time, Timestamp(4));
    }

    #[test]
    fn ego_first_and_ego_last() {
        let d = dataset(
            &[("E", "x", 1), ("F", "x", 2), ("G", "x", 3), ("E", "y", 9), ("F", "y", 3), ("G", "y", 4)],
            &[("E", "F"), ("E", "G")],
        );
        let opts = ExposureOptions::default();
        let x = exposure_at_adoption(&d, id(&d, "E"), d.tag_id("x").unwrap(), opts).unwrap();
        assert_eq!(x.exposure, Some(0.0));
        let y = exposure_at_adoption(&d, id(&d, "E"), d.tag_id("y").unwrap(), opts).unwrap();
        assert_eq!(y.exposure, Some(1.0));
    }

    #[test]
    fn missing_adoption_is_an_error() {
        let d = dataset(&[("B", "t", 1), ("A", "s", 1)], &[("A", "B")]);
        let s = d.tag_id("s").unwrap();
        assert!(matches!(
            exposure_at_adoption(&d, id(&d, "B"), s, ExposureOptions::default()),
            Err(Error::NoAdoption { .. })
        ));
    }

    #[test]
    fn isolated_ego_is_undefined() {
        let d = worked_example();
        let t = d.tag_id("t").unwrap();
        let r = exposure_at_adoption(&d, id(&d, "B"), t, ExposureOptions::default()).unwrap();
        assert_eq!(r.neighborhood_size, 0);
        assert!(!r.is_defined());
        assert!(matches!(
            user_threshold(&d, id(&d, "B"), ExposureOptions::default()),
            Err(Error::UndefinedThreshold { .. })
        ));
    }

    #[test]
    fn ties_rule() {
        let d = dataset(&[("A", "t", 4), ("B", "t", 4), ("C", "t", 1)], &[("A", "B"), ("A", "C")]);
        let t = d.tag_id("t").unwrap();
        let strict = exposure_at_adoption(&d, id(&d, "A"), t, ExposureOptions::default()).unwrap();
        assert_eq!(strict.active_alters, 1);
        let inclusive = exposure_at_adoption(
            &d,
            id(&d, "A"),
            t,
            ExposureOptions {
                ties: TieRule::Inclusive,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(inclusive.active_alters, 2);
        // B tied with A, so only C precedes A either way
        assert_eq!(inclusive.tag_popularity_at_adoption, 1);
    }

    #[test]
    fn popularity_modes() {
        let d = dataset(&[("B", "t", 1), ("B", "t", 2), ("C", "t", 3), ("A", "t", 5)], &[("A", "B")]);
        let t = d.tag_id("t").unwrap();
        let a = id(&d, "A");
        let adopters = exposure_at_adoption(&d, a, t, ExposureOptions::default()).unwrap();
        assert_eq!(adopters.tag_popularity_at_adoption, 2);
        let usages = exposure_at_adoption(
            &d,
            a,
            t,
            ExposureOptions {
                popularity: PopularityMode::Usages,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(usages.tag_popularity_at_adoption, 3);
    }

    #[test]
    fn threshold_is_mean_of_defined_exposures() {
        // A observes B, C, D. Tags: p (exposure 0), q (2/3), r (1).
        let d = dataset(
            &[
                ("A", "p", 1),
                ("B", "p", 2),
                ("B", "q", 1),
                ("C", "q", 1),
                ("A", "q", 3),
                ("B", "r", 1),
                ("C", "r", 1),
                ("D", "r", 1),
                ("A", "r", 5),
            ],
            &[("A", "B"), ("A", "C"), ("A", "D")],
        );
        let th = user_threshold(&d, id(&d, "A"), ExposureOptions::default()).unwrap();
        assert!((th.beta - 5.0 / 9.0).abs() < 1e-15);
        assert_eq!(th.defined_adoptions, 3);
        assert_eq!(th.undefined_adoptions, 0);
    }

    #[test]
    fn single_zero_exposure_gives_zero_beta() {
        let d = dataset(&[("A", "p", 1), ("B", "p", 2)], &[("A", "B")]);
        let th = user_threshold(&d, id(&d, "A"), ExposureOptions::default()).unwrap();
        assert_eq!(th.beta, 0.0);
    }

    #[test]
    fn batch_covers_every_first_usage_in_order() {
        let d = worked_example();
        let batch = all_exposures(&d, ExposureOptions::default());
        let who: Vec<_> = batch.records.iter().map(|r| d.user_label(r.user)).collect();
        assert_eq!(who, vec!["B", "C", "A", "D"]);
        assert_eq!(batch.defined, 1);
        assert_eq!(batch.undefined, 3);
        for r in &batch.records {
            let single = exposure_at_adoption(&d, r.user, r.tag, ExposureOptions::default()).unwrap();
            assert_eq!(&single, r);
        }
    }

    #[test]
    fn population_median_and_exclusions() {
        let mut follows = Vec::new();
        for a in ["b1", "b2", "b3", "b4", "b5"] {
            follows.push(("A", a));
            follows.push(("E", a));
        }
        // A: exposure 1/5 on x; E: exposure 2/5 on z.
        let d = dataset(
            &[("b1", "x", 1), ("A", "x", 2), ("b1", "z", 1), ("b2", "z", 1), ("E", "z", 2)],
            &follows,
        );
        let pop = population_thresholds(&d, ExposureOptions::default());
        let betas: Vec<f64> = pop.per_user.iter().map(|t| t.beta).collect();
        assert_eq!(betas, vec![0.2, 0.4]);
        assert!((pop.per_user_summary.unwrap().median - 0.3).abs() < 1e-15);
        // b1 and b2 adopted but observe nobody
        assert_eq!(pop.excluded_users, 2);
        assert_eq!(pop.per_adoption_summary.unwrap().count, 2);
    }

    #[test]
    fn all_isolated_gives_empty_population() {
        let d = dataset(&[("A", "x", 1), ("B", "x", 2)], &[]);
        let pop = population_thresholds(&d, ExposureOptions::default());
        assert!(pop.per_user.is_empty());
        assert!(pop.per_user_summary.is_none());
        assert_eq!(pop.excluded_users, 2);
    }
}
