//! Evolving undirected simple graph driven by edge insert/delete events.
//!
//! Nodes are dense `u32` identifiers discovered from the events; a node with
//! no incident edges exists only implicitly. The degree sum `m_t` (twice the
//! edge count) is kept up to date on every event.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};

/// Largest accepted node identifier. Adjacency is indexed densely by id.
pub const MAX_NODE_ID: u32 = (1 << 28) - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<u32> for NodeId {
    fn from(id: u32) -> Self {
        NodeId(id)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeOp {
    Insert,
    Delete,
}

impl EdgeOp {
    pub fn inverse(self) -> Self {
        match self {
            EdgeOp::Insert => EdgeOp::Delete,
            EdgeOp::Delete => EdgeOp::Insert,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeEvent {
    pub u: NodeId,
    pub v: NodeId,
    pub op: EdgeOp,
    pub timestamp: i64,
}

impl EdgeEvent {
    pub fn insert(u: impl Into<NodeId>, v: impl Into<NodeId>) -> Self {
        EdgeEvent {
            u: u.into(),
            v: v.into(),
            op: EdgeOp::Insert,
            timestamp: 0,
        }
    }

    pub fn delete(u: impl Into<NodeId>, v: impl Into<NodeId>) -> Self {
        EdgeEvent {
            u: u.into(),
            v: v.into(),
            op: EdgeOp::Delete,
            timestamp: 0,
        }
    }

    pub fn at(mut self, timestamp: i64) -> Self {
        self.timestamp = timestamp;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.u == self.v {
            return Err(Error::SelfLoop(self.u));
        }
        for node in [self.u, self.v] {
            if node.0 > MAX_NODE_ID {
                return Err(Error::InvalidParameter(format!(
                    "node id {node} exceeds maximum {MAX_NODE_ID}"
                )));
            }
        }
        Ok(())
    }
}

/// An ordered batch of events turning snapshot `t - 1` into snapshot `t`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SnapshotDelta {
    pub snapshot_index: usize,
    pub events: Vec<EdgeEvent>,
}

impl SnapshotDelta {
    pub fn new(snapshot_index: usize, events: Vec<EdgeEvent>) -> Self {
        SnapshotDelta {
            snapshot_index,
            events,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApplyResult {
    Applied,
    IgnoredDuplicate,
    IgnoredMissing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DeltaCounts {
    pub applied: usize,
    pub ignored: usize,
}

/// An event that changed the graph, with both endpoint degrees as they were
/// immediately after it was applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AppliedEvent {
    pub u: NodeId,
    pub v: NodeId,
    pub op: EdgeOp,
    pub degree_u: usize,
    pub degree_v: usize,
    /// Graph version right after the event.
    pub version: GraphVersion,
}

/// Identifies one graph value and the number of mutations applied to it.
/// Clones start a new lineage, so versions of diverging copies never compare
/// equal. The default value matches no graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GraphVersion {
    lineage: u64,
    mutations: u64,
}

impl GraphVersion {
    /// Whether `self` is the version immediately following `prev`.
    pub fn follows(self, prev: GraphVersion) -> bool {
        self.lineage != 0 && self.lineage == prev.lineage && self.mutations == prev.mutations + 1
    }
}

fn next_lineage() -> u64 {
    static NEXT: AtomicU64 = AtomicU64::new(1);
    NEXT.fetch_add(1, Ordering::Relaxed)
}

/// Record of a delta application: the events that took effect, in order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DeltaLog {
    pub snapshot_index: usize,
    pub applied: Vec<AppliedEvent>,
    pub ignored: usize,
}

impl DeltaLog {
    pub fn counts(&self) -> DeltaCounts {
        DeltaCounts {
            applied: self.applied.len(),
            ignored: self.ignored,
        }
    }

    /// The delta that undoes exactly the events that took effect.
    pub fn inverse(&self, snapshot_index: usize) -> SnapshotDelta {
        let events = self
            .applied
            .iter()
            .rev()
            .map(|e| EdgeEvent {
                u: e.u,
                v: e.v,
                op: e.op.inverse(),
                timestamp: 0,
            })
            .collect();
        SnapshotDelta::new(snapshot_index, events)
    }
}

/// Adjacency lists with O(1) edge lookup and removal, plus a compact degree
/// array.
#[derive(Debug)]
pub struct GraphState {
    adjacency: Vec<Vec<NodeId>>,
    degrees: Vec<u32>,
    /// Position of `v` in the list of `u`, keyed by `(u, v)`.
    position: FxHashMap<(NodeId, NodeId), u32>,
    degree_sum: u64,
    active_nodes: usize,
    snapshot_index: usize,
    version: GraphVersion,
}

impl Default for GraphState {
    fn default() -> Self {
        GraphState {
            adjacency: Vec::new(),
            degrees: Vec::new(),
            position: FxHashMap::default(),
            degree_sum: 0,
            active_nodes: 0,
            snapshot_index: 0,
            version: GraphVersion {
                lineage: next_lineage(),
                mutations: 0,
            },
        }
    }
}

impl Clone for GraphState {
    fn clone(&self) -> Self {
        GraphState {
            adjacency: self.adjacency.clone(),
            degrees: self.degrees.clone(),
            position: self.position.clone(),
            degree_sum: self.degree_sum,
            active_nodes: self.active_nodes,
            snapshot_index: self.snapshot_index,
            version: GraphVersion {
                lineage: next_lineage(),
                mutations: self.version.mutations,
            },
        }
    }
}

impl GraphState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn version(&self) -> GraphVersion {
        self.version
    }

    /// Builds the initial snapshot `G^0` from a plain event sequence.
    pub fn from_events<'a>(events: impl IntoIterator<Item = &'a EdgeEvent>) -> Result<Self> {
        let mut g = GraphState::new();
        for e in events {
            g.apply_event(e)?;
        }
        Ok(g)
    }

    pub fn from_edges(edges: impl IntoIterator<Item = (u32, u32)>) -> Result<Self> {
        let mut g = GraphState::new();
        for (u, v) in edges {
            g.apply_event(&EdgeEvent::insert(u, v))?;
        }
        Ok(g)
    }

    pub fn snapshot_index(&self) -> usize {
        self.snapshot_index
    }

    #[inline]
    pub fn degree(&self, u: NodeId) -> usize {
        self.degrees.get(u.index()).map_or(0, |&d| d as usize)
    }

    #[inline]
    pub fn neighbors(&self, u: NodeId) -> &[NodeId] {
        self.adjacency.get(u.index()).map_or(&[], Vec::as_slice)
    }

    #[inline]
    pub(crate) fn prefetch_node(&self, u: NodeId) {
        if let Some(list) = self.adjacency.get(u.index()) {
            crate::prefetch::prefetch(list);
            crate::prefetch::prefetch(&self.degrees[u.index()]);
        }
    }

    #[inline]
    pub(crate) fn prefetch_neighbors(&self, u: NodeId) {
        crate::prefetch::prefetch(self.neighbors(u).as_ptr());
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.position.contains_key(&(u, v))
    }

    /// `m_t`: the sum of all degrees.
    pub fn degree_sum(&self) -> u64 {
        self.degree_sum
    }

    pub fn edge_count(&self) -> u64 {
        self.degree_sum / 2
    }

    /// `n_t`: number of nodes with at least one edge.
    pub fn node_count(&self) -> usize {
        self.active_nodes
    }

    /// One past the largest node id ever seen.
    pub fn id_bound(&self) -> usize {
        self.adjacency.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.degrees
            .iter()
            .enumerate()
            .filter(|(_, &d)| d > 0)
            .map(|(i, _)| NodeId(i as u32))
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.nodes().flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .filter(move |&&v| u < v)
                .map(move |&v| (u, v))
        })
    }

    fn ensure(&mut self, u: NodeId) {
        if u.index() >= self.adjacency.len() {
            self.adjacency.resize_with(u.index() + 1, Vec::new);
            self.degrees.resize(u.index() + 1, 0);
        }
    }

    fn link(&mut self, a: NodeId, b: NodeId) {
        let list = &mut self.adjacency[a.index()];
        if list.is_empty() {
            self.active_nodes += 1;
        }
        self.position.insert((a, b), list.len() as u32);
        list.push(b);
        self.degrees[a.index()] += 1;
    }

    fn unlink(&mut self, a: NodeId, b: NodeId) {
        let i = self.position.remove(&(a, b)).expect("edge present") as usize;
        let list = &mut self.adjacency[a.index()];
        list.swap_remove(i);
        if let Some(&moved) = list.get(i) {
            self.position.insert((a, moved), i as u32);
        }
        if list.is_empty() {
            self.active_nodes -= 1;
        }
        self.degrees[a.index()] -= 1;
    }

    pub fn apply_event(&mut self, e: &EdgeEvent) -> Result<ApplyResult> {
        e.validate()?;
        let (u, v) = (e.u, e.v);
        match e.op {
            EdgeOp::Insert => {
                if self.has_edge(u, v) {
                    return Ok(ApplyResult::IgnoredDuplicate);
                }
                self.ensure(u.max(v));
                self.link(u, v);
                self.link(v, u);
                self.degree_sum += 2;
                self.version.mutations += 1;
            }
            EdgeOp::Delete => {
                if !self.has_edge(u, v) {
                    return Ok(ApplyResult::IgnoredMissing);
                }
                self.unlink(u, v);
                self.unlink(v, u);
                self.degree_sum -= 2;
                self.version.mutations += 1;
            }
        }
        Ok(ApplyResult::Applied)
    }

    pub fn apply_delta(&mut self, d: &SnapshotDelta) -> Result<DeltaCounts> {
        self.apply_delta_logged(d).map(|log| log.counts())
    }

    /// Applies a delta and records the post-event endpoint degrees of every
    /// event that took effect. The whole delta is validated before any event
    /// is applied.
    pub fn apply_delta_logged(&mut self, d: &SnapshotDelta) -> Result<DeltaLog> {
        let expected = self.snapshot_index + 1;
        if d.snapshot_index != expected {
            return Err(Error::Sequencing {
                expected,
                got: d.snapshot_index,
            });
        }
        for e in &d.events {
            e.validate()?;
        }
        let mut log = DeltaLog {
            snapshot_index: d.snapshot_index,
            ..DeltaLog::default()
        };
        for e in &d.events {
            match self.apply_event(e)? {
                ApplyResult::Applied => log.applied.push(AppliedEvent {
                    u: e.u,
                    v: e.v,
                    op: e.op,
                    degree_u: self.degree(e.u),
                    degree_v: self.degree(e.v),
                    version: self.version,
                }),
                _ => log.ignored += 1,
            }
        }
        self.snapshot_index = d.snapshot_index;
        Ok(log)
    }

    /// Full scan of symmetry and degree bookkeeping.
    pub fn audit(&self) -> Result<()> {
        let mut sum = 0u64;
        let mut active = 0usize;
        for (i, list) in self.adjacency.iter().enumerate() {
            let u = NodeId(i as u32);
            if list.len() != self.degrees[i] as usize {
                return Err(Error::Audit(format!("degree of {u} out of sync")));
            }
            if !list.is_empty() {
                active += 1;
            }
            sum += list.len() as u64;
            for (pos, &v) in list.iter().enumerate() {
                if v == u {
                    return Err(Error::Audit(format!("self-loop at {u}")));
                }
                if self.position.get(&(u, v)) != Some(&(pos as u32)) {
                    return Err(Error::Audit(format!("edge {u}-{v} is not indexed")));
                }
                if !self.has_edge(v, u) {
                    return Err(Error::Audit(format!("edge {u}-{v} is not symmetric")));
                }
            }
        }
        if self.position.len() as u64 != sum {
            return Err(Error::Audit(format!(
                "edge index holds {} entries but adjacency holds {sum}",
                self.position.len()
            )));
        }
        if sum != self.degree_sum {
            return Err(Error::Audit(format!(
                "degree sum {} but adjacency holds {sum}",
                self.degree_sum
            )));
        }
        if active != self.active_nodes {
            return Err(Error::Audit(format!(
                "node count {} but adjacency holds {active}",
                self.active_nodes
            )));
        }
        Ok(())
    }

    /// Adjacency as sorted neighbor lists, for order-insensitive comparison.
    pub fn canonical_adjacency(&self) -> Vec<(NodeId, Vec<NodeId>)> {
        self.nodes()
            .map(|u| {
                let mut n = self.neighbors(u).to_vec();
                n.sort_unstable();
                (u, n)
            })
            .collect()
    }
}
