use serde::{Deserialize, Serialize};

use crate::event_model::{Dataset, TagId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagPopularity {
    pub tag: TagId,
    pub distinct_adopters: u64,
    pub total_usages: u64,
}

impl TagPopularity {
    pub fn get(&self, measure: PopularityMeasure) -> u64 {
        match measure {
            PopularityMeasure::Adopters => self.distinct_adopters,
            PopularityMeasure::Usages => self.total_usages,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PopularityMeasure {
    #[default]
    Adopters,
    Usages,
}

/// Per-tag counts, indexed by tag handle.
pub fn tag_popularity(d: &Dataset) -> Vec<TagPopularity> {
    (0..d.counts().tags as u32)
        .map(TagId)
        .map(|x| TagPopularity {
            tag: x,
            distinct_adopters: d.tag_first_times(x).len() as u64,
            total_usages: d.tag_usage_times(x).len() as u64,
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankEntry {
    /// 1-based.
    pub rank: usize,
    pub tag: TagId,
    pub count: u64,
}

/// Tags by decreasing count; equal counts keep handle order.
pub fn rank_frequency(table: &[TagPopularity], measure: PopularityMeasure) -> Vec<RankEntry> {
    let mut rows: Vec<(u64, TagId)> = table.iter().map(|p| (p.get(measure), p.tag)).collect();
    rows.sort_unstable_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    rows.into_iter()
        .enumerate()
        .map(|(i, (count, tag))| RankEntry {
            rank: i + 1,
            tag,
            count,
        })
        .collect()
}

/// `(count value, number of tags with that count)`, ascending by value.
pub fn histogram(table: &[TagPopularity], measure: PopularityMeasure) -> Vec<(u64, usize)> {
    let mut values: Vec<u64> = table.iter().map(|p| p.get(measure)).collect();
    values.sort_unstable();
    let mut out: Vec<(u64, usize)> = Vec::new();
    for v in values {
        match out.last_mut() {
            Some((last, n)) if *last == v => *n += 1,
            _ => out.push((v, 1)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event_model::{build_dataset, AdoptionRow, BuildOptions};
    use crate::time::Timestamp;

    fn rows(spec: &[(&str, &str, i64)]) -> Dataset {
        let a = spec.iter().map(|&(u, x, t)| AdoptionRow {
            user: u.into(),
            tag: x.into(),
            time: Timestamp(t),
        });
        build_dataset(a, std::iter::empty(), BuildOptions::default()).unwrap().0
    }

    #[test]
    fn counts_per_tag() {
        let d = rows(&[
            ("B", "t", 1),
            ("C", "t", 2),
            ("A", "t", 4),
            ("D", "t", 5),
            ("B", "t", 7),
            ("A", "once", 3),
        ]);
        let table = tag_popularity(&d);
        let t = &table[d.tag_id("t").unwrap().index()];
        assert_eq!((t.distinct_adopters, t.total_usages), (4, 5));
        let once = &table[d.tag_id("once").unwrap().index()];
        assert_eq!((once.distinct_adopters, once.total_usages), (1, 1));
        assert_eq!(table.iter().map(|p| p.total_usages).sum::<u64>(), d.counts().total_usages as u64);

        let ranks = rank_frequency(&table, PopularityMeasure::Usages);
        assert_eq!(ranks[0].count, 5);
        assert_eq!(ranks[1].rank, 2);
        assert_eq!(histogram(&table, PopularityMeasure::Adopters), vec![(1, 1), (4, 1)]);
    }
}
