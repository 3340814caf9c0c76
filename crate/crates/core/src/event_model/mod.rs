//! The temporal bipartite adoption log and the directed follower graph.
//!
//! A [`Dataset`] is built once from raw rows and is immutable afterwards.
//! User and tag handles are dense `u32`s assigned in lexicographic label
//! order, so the same rows in any order produce the same handles.

mod graph;
pub mod io;
pub mod snapshot;

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::Timestamp;

pub use graph::FollowerGraph;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TagId(pub u32);

impl UserId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl TagId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Bijection between dense handles and their original string labels.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabelTable {
    labels: Vec<String>,
    index: HashMap<String, u32>,
}

impl LabelTable {
    /// Labels must be strictly increasing.
    pub(crate) fn from_sorted(labels: Vec<String>) -> Result<Self> {
        if labels.len() > u32::MAX as usize {
            return Err(Error::Snapshot("too many labels".into()));
        }
        if labels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Snapshot("label table is not strictly sorted".into()));
        }
        let index = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i as u32))
            .collect();
        Ok(Self { labels, index })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, handle: u32) -> &str {
        &self.labels[handle as usize]
    }

    pub fn get(&self, label: &str) -> Option<u32> {
        self.index.get(label).copied()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// One raw usage row: `user` used `tag` at `time`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdoptionRow {
    pub user: String,
    pub tag: String,
    pub time: Timestamp,
}

/// One raw follow row: `src` observes `dst`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FollowRow {
    pub src: String,
    pub dst: String,
    pub since: Option<Timestamp>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AdoptionEvent {
    pub user: UserId,
    pub tag: TagId,
    pub time: Timestamp,
    pub is_first_usage: bool,
}

impl AdoptionEvent {
    fn key(&self) -> (Timestamp, UserId, TagId) {
        (self.time, self.user, self.tag)
    }
}

/// `src` (the ego) observes `dst` (an alter). `since = None` means the edge
/// exists at every time.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FollowEdge {
    pub src: UserId,
    pub dst: UserId,
    pub since: Option<Timestamp>,
}

impl FollowEdge {
    pub fn present_at(&self, t: Timestamp) -> bool {
        self.since.is_none_or(|s| s <= t)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildOptions {
    /// Read follow rows as `dst observes src`.
    pub reverse_edges: bool,
    /// Keep only reciprocated follow edges.
    pub mutual_only: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildReport {
    pub self_loops_dropped: usize,
    pub duplicate_edges_merged: usize,
    pub non_mutual_dropped: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetCounts {
    pub users: usize,
    pub tags: usize,
    pub first_usages: usize,
    pub total_usages: usize,
    pub edges: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityScope {
    All,
    GiantComponent,
}

/// Immutable adoption log plus follower graph.
#[derive(Clone, Debug)]
pub struct Dataset {
    users: LabelTable,
    tags: LabelTable,
    /// Sorted by `(time, user, tag)`.
    events: Vec<AdoptionEvent>,
    /// Sorted by `(src, dst)`, unique.
    edges: Vec<FollowEdge>,
    out_offsets: Vec<usize>,
    first_offsets: Vec<usize>,
    /// Per user, first usages sorted by tag.
    first_by_user: Vec<(TagId, Timestamp)>,
    tag_first_offsets: Vec<usize>,
    /// Per tag, sorted first-usage times.
    tag_first_times: Vec<Timestamp>,
    tag_usage_offsets: Vec<usize>,
    /// Per tag, sorted usage times (all usages).
    tag_usage_times: Vec<Timestamp>,
    counts: DatasetCounts,
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        // Everything else is derived from these four.
        self.users == other.users
            && self.tags == other.tags
            && self.events == other.events
            && self.edges == other.edges
    }
}

struct Interner {
    index: HashMap<String, u32>,
}

impl Interner {
    fn new() -> Self {
        Self {
            index: HashMap::new(),
        }
    }

    fn intern(&mut self, label: String) -> u32 {
        let next = self.index.len() as u32;
        *self.index.entry(label).or_insert(next)
    }

    /// Sorted label table plus `remap[provisional] = final`.
    fn finish(self) -> (Vec<String>, Vec<u32>) {
        let mut pairs: Vec<(String, u32)> = self.index.into_iter().collect();
        pairs.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let mut remap = vec![0u32; pairs.len()];
        let mut labels = Vec::with_capacity(pairs.len());
        for (rank, (label, provisional)) in pairs.into_iter().enumerate() {
            remap[provisional as usize] = rank as u32;
            labels.push(label);
        }
        (labels, remap)
    }
}

/// Builds a [`Dataset`] from raw rows in any order.
///
/// Duplicate follow edges are merged keeping the earliest `since` (an
/// untimestamped duplicate wins). Self-loops are dropped and counted.
pub fn build_dataset<A, F>(adoptions: A, follows: F, options: BuildOptions) -> Result<(Dataset, BuildReport)>
where
    A: IntoIterator<Item = AdoptionRow>,
    F: IntoIterator<Item = FollowRow>,
{
    let mut report = BuildReport::default();
    let mut users = Interner::new();
    let mut tags = Interner::new();

    let mut raw_events: Vec<(i64, u32, u32)> = Vec::new();
    for row in adoptions {
        let u = users.intern(row.user);
        let x = tags.intern(row.tag);
        raw_events.push((row.time.0, u, x));
    }

    let mut raw_edges: Vec<(u32, u32, Option<Timestamp>)> = Vec::new();
    for row in follows {
        let (src, dst) = if options.reverse_edges {
            (row.dst, row.src)
        } else {
            (row.src, row.dst)
        };
        if src == dst {
            report.self_loops_dropped += 1;
            continue;
        }
        let s = users.intern(src);
        let d = users.intern(dst);
        raw_edges.push((s, d, row.since));
    }

    if users.index.len() > u32::MAX as usize || tags.index.len() > u32::MAX as usize {
        return Err(Error::invalid("more than 2^32 distinct labels"));
    }
    let (user_labels, user_remap) = users.finish();
    let (tag_labels, tag_remap) = tags.finish();

    let mut events: Vec<AdoptionEvent> = raw_events
        .into_iter()
        .map(|(t, u, x)| AdoptionEvent {
            user: UserId(user_remap[u as usize]),
            tag: TagId(tag_remap[x as usize]),
            time: Timestamp(t),
            is_first_usage: false,
        })
        .collect();
    events.sort_unstable_by_key(AdoptionEvent::key);
    flag_first_usages(&mut events);

    let mut edges: Vec<FollowEdge> = raw_edges
        .into_iter()
        .map(|(s, d, since)| FollowEdge {
            src: UserId(user_remap[s as usize]),
            dst: UserId(user_remap[d as usize]),
            since,
        })
        .collect();
    // `None < Some(_)`, so the first of each (src, dst) run carries the
    // earliest presence time.
    edges.sort_unstable_by_key(|e| (e.src, e.dst, e.since));
    let before = edges.len();
    edges.dedup_by_key(|e| (e.src, e.dst));
    report.duplicate_edges_merged = before - edges.len();

    if options.mutual_only {
        let keys: Vec<(UserId, UserId)> = edges.iter().map(|e| (e.src, e.dst)).collect();
        let before = edges.len();
        edges.retain(|e| keys.binary_search(&(e.dst, e.src)).is_ok());
        report.non_mutual_dropped = before - edges.len();
    }

    let dataset = Dataset::assemble(
        LabelTable::from_sorted(user_labels)?,
        LabelTable::from_sorted(tag_labels)?,
        events,
        edges,
    );
    Ok((dataset, report))
}

fn flag_first_usages(events: &mut [AdoptionEvent]) {
    let mut seen: HashSet<u64> = HashSet::with_capacity(events.len());
    for e in events.iter_mut() {
        let key = (u64::from(e.user.0) << 32) | u64::from(e.tag.0);
        e.is_first_usage = seen.insert(key);
    }
}

fn csr_offsets(n: usize, keys: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut offsets = vec![0usize; n + 1];
    for k in keys {
        offsets[k + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    offsets
}

impl Dataset {
    /// Validates externally supplied parts (e.g. from a snapshot) and builds
    /// the derived indices.
    pub fn from_parts(
        users: Vec<String>,
        tags: Vec<String>,
        events: Vec<AdoptionEvent>,
        edges: Vec<FollowEdge>,
    ) -> Result<Self> {
        let users = LabelTable::from_sorted(users)?;
        let tags = LabelTable::from_sorted(tags)?;
        let (nu, nt) = (users.len(), tags.len());
        for (i, e) in events.iter().enumerate() {
            if e.user.index() >= nu || e.tag.index() >= nt {
                return Err(Error::Snapshot(format!("event {i} references an unknown id")));
            }
        }
        if events.windows(2).any(|w| w[0].key() > w[1].key()) {
            return Err(Error::Snapshot("events are not sorted by (time, user, tag)".into()));
        }
        let mut expected = events.clone();
        flag_first_usages(&mut expected);
        if expected
            .iter()
            .zip(&events)
            .any(|(a, b)| a.is_first_usage != b.is_first_usage)
        {
            return Err(Error::Snapshot("first-usage flags are inconsistent".into()));
        }
        for (i, e) in edges.iter().enumerate() {
            if e.src.index() >= nu || e.dst.index() >= nu {
                return Err(Error::Snapshot(format!("edge {i} references an unknown id")));
            }
            if e.src == e.dst {
                return Err(Error::Snapshot(format!("edge {i} is a self-loop")));
            }
        }
        if edges
            .windows(2)
            .any(|w| (w[0].src, w[0].dst) >= (w[1].src, w[1].dst))
        {
            return Err(Error::Snapshot("edges are not strictly sorted by (src, dst)".into()));
        }
        Ok(Self::assemble(users, tags, events, edges))
    }

    fn assemble(
        users: LabelTable,
        tags: LabelTable,
        events: Vec<AdoptionEvent>,
        edges: Vec<FollowEdge>,
    ) -> Self {
        let (nu, nt) = (users.len(), tags.len());
        let out_offsets = csr_offsets(nu, edges.iter().map(|e| e.src.index()));

        let firsts: Vec<&AdoptionEvent> = events.iter().filter(|e| e.is_first_usage).collect();
        let first_offsets = csr_offsets(nu, firsts.iter().map(|e| e.user.index()));
        let mut first_by_user = vec![(TagId(0), Timestamp(0)); firsts.len()];
        let mut cursor = first_offsets.clone();
        for e in &firsts {
            let slot = &mut cursor[e.user.index()];
            first_by_user[*slot] = (e.tag, e.time);
            *slot += 1;
        }
        for u in 0..nu {
            first_by_user[first_offsets[u]..first_offsets[u + 1]].sort_unstable_by_key(|p| p.0);
        }

        // Events are time-sorted, so per-tag buckets come out sorted.
        let tag_first_offsets = csr_offsets(nt, firsts.iter().map(|e| e.tag.index()));
        let mut tag_first_times = vec![Timestamp(0); firsts.len()];
        let mut cursor = tag_first_offsets.clone();
        for e in &firsts {
            let slot = &mut cursor[e.tag.index()];
            tag_first_times[*slot] = e.time;
            *slot += 1;
        }

        let tag_usage_offsets = csr_offsets(nt, events.iter().map(|e| e.tag.index()));
        let mut tag_usage_times = vec![Timestamp(0); events.len()];
        let mut cursor = tag_usage_offsets.clone();
        for e in &events {
            let slot = &mut cursor[e.tag.index()];
            tag_usage_times[*slot] = e.time;
            *slot += 1;
        }

        let counts = DatasetCounts {
            users: nu,
            tags: nt,
            first_usages: firsts.len(),
            total_usages: events.len(),
            edges: edges.len(),
        };
        Self {
            users,
            tags,
            events,
            edges,
            out_offsets,
            first_offsets,
            first_by_user,
            tag_first_offsets,
            tag_first_times,
            tag_usage_offsets,
            tag_usage_times,
            counts,
        }
    }

    pub fn counts(&self) -> DatasetCounts {
        self.counts
    }

    pub fn users(&self) -> &LabelTable {
        &self.users
    }

    pub fn tags(&self) -> &LabelTable {
        &self.tags
    }

    pub fn user_label(&self, u: UserId) -> &str {
        self.users.label(u.0)
    }

    pub fn tag_label(&self, x: TagId) -> &str {
        self.tags.label(x.0)
    }

    pub fn user_id(&self, label: &str) -> Option<UserId> {
        self.users.get(label).map(UserId)
    }

    pub fn tag_id(&self, label: &str) -> Option<TagId> {
        self.tags.get(label).map(TagId)
    }

    pub fn events(&self) -> &[AdoptionEvent] {
        &self.events
    }

    pub fn first_usages(&self) -> impl Iterator<Item = &AdoptionEvent> + '_ {
        self.events.iter().filter(|e| e.is_first_usage)
    }

    pub fn edges(&self) -> &[FollowEdge] {
        &self.edges
    }

    /// Every out-edge of `u`, regardless of time.
    pub fn out_edges(&self, u: UserId) -> &[FollowEdge] {
        &self.edges[self.out_offsets[u.index()]..self.out_offsets[u.index() + 1]]
    }

    /// Alters `u` observes at time `t`, in handle order.
    pub fn neighbors_at(&self, u: UserId, t: Timestamp) -> Vec<UserId> {
        self.out_edges(u)
            .iter()
            .filter(|e| e.present_at(t))
            .map(|e| e.dst)
            .collect()
    }

    /// `u`'s first usages, sorted by tag.
    pub fn first_usages_of(&self, u: UserId) -> &[(TagId, Timestamp)] {
        &self.first_by_user[self.first_offsets[u.index()]..self.first_offsets[u.index() + 1]]
    }

    pub fn first_usage_time(&self, u: UserId, x: TagId) -> Option<Timestamp> {
        let firsts = self.first_usages_of(u);
        firsts
            .binary_search_by_key(&x, |p| p.0)
            .ok()
            .map(|i| firsts[i].1)
    }

    /// Sorted first-usage times of `x` (one per distinct adopter).
    pub fn tag_first_times(&self, x: TagId) -> &[Timestamp] {
        &self.tag_first_times[self.tag_first_offsets[x.index()]..self.tag_first_offsets[x.index() + 1]]
    }

    /// Sorted times of every usage of `x`.
    pub fn tag_usage_times(&self, x: TagId) -> &[Timestamp] {
        &self.tag_usage_times[self.tag_usage_offsets[x.index()]..self.tag_usage_offsets[x.index() + 1]]
    }

    /// Largest weakly connected component of the follower graph, sorted.
    /// Ties go to the component holding the smallest handle.
    pub fn giant_component(&self) -> Vec<UserId> {
        let n = self.counts.users;
        if n == 0 {
            return Vec::new();
        }
        let mut dsu = DisjointSets::new(n);
        for e in &self.edges {
            dsu.union(e.src.index(), e.dst.index());
        }
        let mut size = vec![0usize; n];
        for v in 0..n {
            size[dsu.find(v)] += 1;
        }
        // Scanning in handle order meets each component first at its minimum
        // handle, so a strict `>` keeps the smallest on ties.
        let mut best_root = dsu.find(0);
        for v in 0..n {
            let r = dsu.find(v);
            if size[r] > size[best_root] {
                best_root = r;
            }
        }
        (0..n)
            .filter(|&v| dsu.find(v) == best_root)
            .map(|v| UserId(v as u32))
            .collect()
    }

    /// Directed edge density `m / (n (n - 1))` over `scope`.
    pub fn density(&self, scope: DensityScope) -> Result<f64> {
        match scope {
            DensityScope::All => directed_density(self.counts.users, self.edges.len()),
            DensityScope::GiantComponent => {
                let members = self.giant_component();
                let mut inside = vec![false; self.counts.users];
                for u in &members {
                    inside[u.index()] = true;
                }
                let m = self
                    .edges
                    .iter()
                    .filter(|e| inside[e.src.index()] && inside[e.dst.index()])
                    .count();
                directed_density(members.len(), m)
            }
        }
    }

    /// The static follower graph (edge times ignored).
    pub fn follower_graph(&self) -> FollowerGraph {
        let edges = self.edges.iter().map(|e| (e.src.0, e.dst.0)).collect();
        FollowerGraph::new(self.users.labels().to_vec(), edges)
            .expect("dataset edges are valid by construction")
    }
}

/// `edges / (n (n - 1))`.
pub fn directed_density(n: usize, edges: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::UndefinedDensity { users: n });
    }
    let n = n as f64;
    Ok(edges as f64 / (n * (n - 1.0)))
}

struct DisjointSets {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}
