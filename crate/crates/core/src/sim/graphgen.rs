//! Seeded synthetic follower graphs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event_model::FollowerGraph;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphKind {
    /// Every ordered pair `(u, v)`, `u != v`, is an edge independently with
    /// probability `mean_out_degree / (n - 1)`.
    ErdosRenyi { n: usize, mean_out_degree: f64 },
    /// A clique on `m + 1` users, then each newcomer observes `m` distinct
    /// existing users picked with probability proportional to total degree.
    PreferentialAttachment { n: usize, m: usize },
}

impl GraphKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            GraphKind::ErdosRenyi { n, mean_out_degree } => {
                if n < 2 {
                    return Err(Error::invalid(format!("erdos_renyi needs n >= 2, got {n}")));
                }
                if n > u32::MAX as usize {
                    return Err(Error::invalid("too many users"));
                }
                let max = (n - 1) as f64;
                if !(mean_out_degree.is_finite() && (0.0..=max).contains(&mean_out_degree)) {
                    return Err(Error::invalid(format!(
                        "mean_out_degree must lie in [0, {max}], got {mean_out_degree}"
                    )));
                }
            }
            GraphKind::PreferentialAttachment { n, m } => {
                if m == 0 {
                    return Err(Error::invalid("preferential_attachment needs m >= 1"));
                }
                if n < 2 || n < m + 1 {
                    return Err(Error::invalid(format!(
                        "preferential_attachment needs n >= max(2, m + 1), got n={n}, m={m}"
                    )));
                }
                if n > u32::MAX as usize {
                    return Err(Error::invalid("too many users"));
                }
            }
        }
        Ok(())
    }

    pub fn nodes(&self) -> usize {
        match *self {
            GraphKind::ErdosRenyi { n, .. } | GraphKind::PreferentialAttachment { n, .. } => n,
        }
    }
}

/// Generates a graph; the same `(kind, seed)` always yields the same graph.
pub fn gen_graph(kind: &GraphKind, seed: u64) -> Result<FollowerGraph> {
    kind.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges = match *kind {
        GraphKind::ErdosRenyi { n, mean_out_degree } => erdos_renyi(&mut rng, n, mean_out_degree / (n - 1) as f64),
        GraphKind::PreferentialAttachment { n, m } => preferential_attachment(&mut rng, n, m),
    };
    FollowerGraph::with_generated_labels(kind.nodes(), edges)
}

/// Walks the `n (n - 1)` ordered pairs with geometric skips.
fn erdos_renyi(rng: &mut impl Rng, n: usize, p: f64) -> Vec<(u32, u32)> {
    let slots = (n as u64) * (n as u64 - 1);
    let slot_edge = |s: u64| {
        let u = s / (n as u64 - 1);
        let mut v = s % (n as u64 - 1);
        if v >= u {
            v += 1;
        }
        (u as u32, v as u32)
    };
    if p <= 0.0 {
        return Vec::new();
    }
    if p >= 1.0 {
        return (0..slots).map(slot_edge).collect();
    }
    let log_q = (-p).ln_1p();
    let mut edges = Vec::with_capacity((slots as f64 * p * 1.05) as usize + 16);
    let mut next = 0u64;
    loop {
        let u: f64 = rng.random();
        let skip = ((1.0 - u).ln() / log_q).floor();
        if skip >= (slots - next) as f64 {
            break;
        }
        next += skip as u64;
        edges.push(slot_edge(next));
        next += 1;
        if next >= slots {
            break;
        }
    }
    edges
}

fn preferential_attachment(rng: &mut impl Rng, n: usize, m: usize) -> Vec<(u32, u32)> {
    let core = m + 1;
    let mut edges = Vec::with_capacity(core * m + (n - core) * m);
    // Every edge contributes both endpoints, so a uniform pick from this list
    // is a pick proportional to total degree.
    let mut endpoints: Vec<u32> = Vec::with_capacity(2 * edges.capacity());
    for u in 0..core as u32 {
        for v in 0..core as u32 {
            if u != v {
                edges.push((u, v));
                endpoints.extend([u, v]);
            }
        }
    }
    let mut targets = Vec::with_capacity(m);
    for u in core as u32..n as u32 {
        targets.clear();
        while targets.len() < m {
            let t = endpoints[rng.random_range(0..endpoints.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for &t in &targets {
            edges.push((u, t));
            endpoints.extend([u, t]);
        }
    }
    edges
}
