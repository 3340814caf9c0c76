//! Time-bucketed adoption and saturation curve for one tag.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event_model::{Dataset, TagId};
use crate::time::Timestamp;

const MAX_BUCKETS: i128 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// Start of the bucket.
    pub time: Timestamp,
    pub new_first_usages: u64,
    pub cumulative_first_usages: u64,
    pub subsequent_usages: u64,
    /// `cumulative_first_usages / |U|`.
    pub saturation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdoptionCurve {
    pub tag: TagId,
    pub bucket_ms: i64,
    pub points: Vec<CurvePoint>,
}

/// Buckets start at the tag's first usage and run through the bucket
/// holding its last usage. Empty buckets carry the cumulative count forward.
pub fn adoption_curve(d: &Dataset, x: TagId, bucket_ms: i64) -> Result<AdoptionCurve> {
    if x.index() >= d.counts().tags {
        return Err(Error::UnknownTag(format!("#{}", x.0)));
    }
    if bucket_ms <= 0 {
        return Err(Error::invalid("bucket width must be positive"));
    }
    let usages = d.tag_usage_times(x);
    let (Some(&start), Some(&end)) = (usages.first(), usages.last()) else {
        return Err(Error::UnknownTag(d.tag_label(x).to_owned()));
    };
    let n_buckets = (i128::from(end.0) - i128::from(start.0)) / i128::from(bucket_ms) + 1;
    if n_buckets > MAX_BUCKETS {
        return Err(Error::invalid(format!(
            "{n_buckets} buckets requested; widen the bucket (limit {MAX_BUCKETS})"
        )));
    }
    let n_buckets = n_buckets as usize;
    let bucket_of = |t: Timestamp| ((i128::from(t.0) - i128::from(start.0)) / i128::from(bucket_ms)) as usize;

    let mut new = vec![0u64; n_buckets];
    let mut subsequent = vec![0u64; n_buckets];
    for e in d.events().iter().filter(|e| e.tag == x) {
        if e.is_first_usage {
            new[bucket_of(e.time)] += 1;
        } else {
            subsequent[bucket_of(e.time)] += 1;
        }
    }

    let users = d.counts().users as f64;
    let mut cumulative = 0u64;
    let points = (0..n_buckets)
        .map(|b| {
            cumulative += new[b];
            CurvePoint {
                time: Timestamp((i128::from(start.0) + b as i128 * i128::from(bucket_ms)) as i64),
                new_first_usages: new[b],
                cumulative_first_usages: cumulative,
                subsequent_usages: subsequent[b],
                saturation: cumulative as f64 / users,
            }
        })
        .collect();
    Ok(AdoptionCurve {
        tag: x,
        bucket_ms,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event_model::{build_dataset, AdoptionRow, BuildOptions};

    fn rows(spec: &[(&str, &str, i64)]) -> Dataset {
        let a = spec.iter().map(|&(u, x, t)| AdoptionRow {
            user: u.into(),
            tag: x.into(),
            time: Timestamp(t),
        });
        build_dataset(a, std::iter::empty(), BuildOptions::default()).unwrap().0
    }

    #[test]
    fn hand_bucketed_curve() {
        let d = rows(&[("B", "t", 1), ("C", "t", 2), ("A", "t", 4), ("D", "t", 5), ("B", "t", 4)]);
        let c = adoption_curve(&d, d.tag_id("t").unwrap(), 1).unwrap();
        let cum: Vec<u64> = c.points.iter().map(|p| p.cumulative_first_usages).collect();
        assert_eq!(cum, vec![1, 2, 2, 3, 4]);
        let new: Vec<u64> = c.points.iter().map(|p| p.new_first_usages).collect();
        assert_eq!(new, vec![1, 1, 0, 1, 1]);
        assert_eq!(c.points[3].subsequent_usages, 1);
        assert_eq!(c.points[2].time, Timestamp(3));
        assert_eq!(c.points.last().unwrap().saturation, 1.0);
    }

    #[test]
    fn single_usage_tag() {
        let d = rows(&[("A", "solo", 10), ("B", "x", 1), ("C", "x", 1)]);
        let c = adoption_curve(&d, d.tag_id("solo").unwrap(), 1000).unwrap();
        assert_eq!(c.points.len(), 1);
        assert!((c.points[0].saturation - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn wide_buckets_and_errors() {
        let d = rows(&[("A", "t", 0), ("B", "t", 9), ("C", "t", 10)]);
        let t = d.tag_id("t").unwrap();
        let c = adoption_curve(&d, t, 10).unwrap();
        assert_eq!(c.points.len(), 2);
        assert_eq!(c.points[0].new_first_usages, 2);
        assert!(adoption_curve(&d, t, 0).is_err());
        assert!(matches!(adoption_curve(&d, TagId(7), 1), Err(Error::UnknownTag(_))));
        let far = rows(&[("A", "t", 0), ("B", "t", i64::MAX)]);
        assert!(adoption_curve(&far, TagId(0), 1).is_err());
    }
}
