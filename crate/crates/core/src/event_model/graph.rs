use crate::error::{Error, Result};

/// Static directed follower graph in CSR form, indexed by dense handles.
///
/// An edge `u -> v` means `u` observes `v`. Both directions are indexed:
/// threshold models read a user's alters (out-neighbours), cascades push to
/// a new adopter's observers (in-neighbours).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FollowerGraph {
    labels: Vec<String>,
    out_offsets: Vec<usize>,
    out_targets: Vec<u32>,
    in_offsets: Vec<usize>,
    in_sources: Vec<u32>,
}

impl FollowerGraph {
    /// Duplicate edges are collapsed; self-loops and out-of-range handles are
    /// rejected.
    pub fn new(labels: Vec<String>, mut edges: Vec<(u32, u32)>) -> Result<Self> {
        let n = labels.len();
        for &(s, d) in &edges {
            if s as usize >= n || d as usize >= n {
                return Err(Error::invalid(format!("edge ({s}, {d}) out of range for {n} users")));
            }
            if s == d {
                return Err(Error::invalid(format!("self-loop on user {s}")));
            }
        }
        edges.sort_unstable();
        edges.dedup();

        let mut out_offsets = vec![0usize; n + 1];
        let mut in_offsets = vec![0usize; n + 1];
        for &(s, d) in &edges {
            out_offsets[s as usize + 1] += 1;
            in_offsets[d as usize + 1] += 1;
        }
        for i in 0..n {
            out_offsets[i + 1] += out_offsets[i];
            in_offsets[i + 1] += in_offsets[i];
        }
        let out_targets = edges.iter().map(|&(_, d)| d).collect();
        let mut in_sources = vec![0u32; edges.len()];
        let mut cursor = in_offsets.clone();
        // Sources arrive in increasing order, so each in-list is sorted.
        for &(s, d) in &edges {
            in_sources[cursor[d as usize]] = s;
            cursor[d as usize] += 1;
        }
        Ok(Self {
            labels,
            out_offsets,
            out_targets,
            in_offsets,
            in_sources,
        })
    }

    /// Users labelled `u0`, `u1`, … zero-padded so lexicographic and numeric
    /// order agree.
    pub fn with_generated_labels(n: usize, edges: Vec<(u32, u32)>) -> Result<Self> {
        Self::new(generated_labels(n), edges)
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out_targets.len()
    }

    pub fn label(&self, u: u32) -> &str {
        &self.labels[u as usize]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Users `u` observes.
    pub fn alters(&self, u: u32) -> &[u32] {
        let u = u as usize;
        &self.out_targets[self.out_offsets[u]..self.out_offsets[u + 1]]
    }

    /// Users observing `v`.
    pub fn observers(&self, v: u32) -> &[u32] {
        let v = v as usize;
        &self.in_sources[self.in_offsets[v]..self.in_offsets[v + 1]]
    }

    pub fn out_degree(&self, u: u32) -> usize {
        self.alters(u).len()
    }

    pub fn in_degree(&self, v: u32) -> usize {
        self.observers(v).len()
    }

    /// Edges in `(src, dst)` order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.node_count() as u32).flat_map(move |u| self.alters(u).iter().map(move |&v| (u, v)))
    }
}

pub(crate) fn generated_labels(n: usize) -> Vec<String> {
    let width = n.saturating_sub(1).to_string().len();
    (0..n).map(|i| format!("u{i:0width$}")).collect()
}
