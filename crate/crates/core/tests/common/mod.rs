#![allow(dead_code)]

use std::collections::HashSet;

use dynppe::graph::{EdgeEvent, GraphState, NodeId};
use dynppe::stream::EventStream;
use dynppe::SparseVector;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `m` distinct random edges on `0..n`, in random order.
pub fn random_edges(rng: &mut impl Rng, n: u32, m: usize) -> Vec<(u32, u32)> {
    let max = n as usize * n.saturating_sub(1) as usize / 2;
    assert!(m <= max, "{m} distinct edges requested on {n} nodes");
    let mut seen = HashSet::new();
    let mut edges = Vec::with_capacity(m);
    while edges.len() < m {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u == v {
            continue;
        }
        let key = (u.min(v), u.max(v));
        if seen.insert(key) {
            edges.push(key);
        }
    }
    edges.shuffle(rng);
    edges
}

pub fn inserts(edges: &[(u32, u32)], t0: i64) -> Vec<EdgeEvent> {
    edges
        .iter()
        .enumerate()
        .map(|(i, &(u, v))| EdgeEvent::insert(u, v).at(t0 + i as i64))
        .collect()
}

/// Empty `G^0` followed by blocks of `per_block` insertions.
pub fn insertion_stream(edges: &[(u32, u32)], per_block: usize) -> EventStream {
    let mut blocks = vec![Vec::new()];
    for (i, chunk) in edges.chunks(per_block).enumerate() {
        blocks.push(inserts(chunk, (i * per_block) as i64));
    }
    EventStream::from_blocks(blocks)
}

/// `k` distinct nodes from `0..n`, sorted.
pub fn sample_nodes(rng: &mut impl Rng, n: u32, k: usize) -> Vec<NodeId> {
    let mut nodes: Vec<NodeId> = rand::seq::index::sample(rng, n as usize, k)
        .into_iter()
        .map(|i| NodeId(i as u32))
        .collect();
    nodes.sort_unstable();
    nodes
}

pub fn sparse_l1_distance(a: &SparseVector, b: &SparseVector) -> f64 {
    let mut keys: Vec<NodeId> = a.iter().chain(b.iter()).map(|(k, _)| k).collect();
    keys.sort_unstable();
    keys.dedup();
    keys.into_iter().map(|k| (a.get(k) - b.get(k)).abs()).sum()
}

/// A random edge of `g`.
pub fn random_existing_edge(rng: &mut impl Rng, g: &GraphState) -> Option<(NodeId, NodeId)> {
    let edges: Vec<(NodeId, NodeId)> = g.edges().collect();
    edges.get(rng.random_range(0..edges.len().max(1))).copied()
}
