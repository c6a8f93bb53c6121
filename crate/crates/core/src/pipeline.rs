//! Snapshot driver for a tracked node subset.
//!
//! Each snapshot runs in two phases: the delta is applied to the shared graph
//! once, recording post-event degrees, and then every tracked source replays
//! that log, pushes to the snapshot precision and re-projects its embedding.
//! The second phase touches one [`PprState`] per worker and only reads the
//! graph, so it runs on a rayon pool; results are gathered in node order.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{DeltaLog, GraphState, NodeId, SnapshotDelta};
use crate::hashing::{BucketTable, EmbeddingVector, HashConfig};
use crate::ppr::{validate_alpha, PprState, PushParams, DEFAULT_MAX_WORK};
use crate::stream::EventStream;

/// Precision schedule for the per-snapshot push threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Precision {
    /// `epsilon / m_t`, which bounds the l1 error of every estimate by `epsilon`.
    Adaptive,
    /// The same threshold at every snapshot.
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub alpha: f64,
    pub epsilon: f64,
    pub beta: f64,
    pub hash: HashConfig,
    pub parallelism: usize,
    pub precision: Precision,
    pub max_work: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            alpha: 0.15,
            epsilon: 0.1,
            beta: 0.0,
            hash: HashConfig::from_seed(128, 0).expect("default hash config"),
            parallelism: 1,
            precision: Precision::Adaptive,
            max_work: DEFAULT_MAX_WORK,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        validate_alpha(self.alpha)?;
        if !(self.epsilon > 0.0 && self.epsilon <= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must lie in (0, 2], got {}",
                self.epsilon
            )));
        }
        if !(0.0..1.0).contains(&self.beta) {
            return Err(Error::InvalidParameter(format!(
                "beta must lie in [0, 1), got {}",
                self.beta
            )));
        }
        if self.parallelism == 0 {
            return Err(Error::InvalidParameter(
                "parallelism must be at least 1".into(),
            ));
        }
        if let Precision::Fixed(eps) = self.precision {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "fixed precision must be positive, got {eps}"
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.hash.dim()
    }

    /// Push threshold for a snapshot with degree sum `m_t`.
    pub fn epsilon_for(&self, m_t: u64) -> Result<f64> {
        match self.precision {
            Precision::Adaptive => adaptive_epsilon(self.epsilon, m_t),
            Precision::Fixed(eps) if m_t > 0 => Ok(eps),
            Precision::Fixed(_) => Err(Error::NoEdges),
        }
    }

    fn push_params(&self, epsilon_t: f64) -> Result<PushParams> {
        Ok(PushParams::new(self.alpha, epsilon_t)?
            .with_beta(self.beta)?
            .with_max_work(self.max_work))
    }
}

/// `epsilon / m_t`.
pub fn adaptive_epsilon(epsilon: f64, m_t: u64) -> Result<f64> {
    if m_t == 0 {
        return Err(Error::NoEdges);
    }
    Ok(epsilon / m_t as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryEntry {
    pub snapshot: usize,
    /// Degree of the node at this snapshot, when known.
    pub degree: Option<usize>,
    /// False while the node is waiting for its first edge; the vector is then
    /// all zeros.
    pub initialized: bool,
    pub vector: EmbeddingVector,
}

pub type EmbeddingHistory = Vec<HistoryEntry>;

#[derive(Debug, Clone)]
pub struct TrackedNode {
    pub node: NodeId,
    pub ppr: PprState,
    pub history: EmbeddingHistory,
    pub activated_at: Option<usize>,
}

/// Per-snapshot instrumentation.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotReport {
    pub snapshot: usize,
    pub degree_sum: u64,
    pub node_count: usize,
    /// Threshold passed to every push this snapshot; `None` on an empty graph.
    pub epsilon_t: Option<f64>,
    pub applied: usize,
    pub ignored: usize,
    pub pushes: u64,
    pub work: u64,
    pub activated: Vec<NodeId>,
}

#[derive(Debug)]
pub struct PipelineState {
    cfg: RunConfig,
    graph: GraphState,
    tracked: Vec<TrackedNode>,
    reports: Vec<SnapshotReport>,
    buckets: BucketTable,
    pool: rayon::ThreadPool,
}

struct StepOutcome {
    pushes: u64,
    work: u64,
    activated: bool,
}

fn step(
    node: &mut TrackedNode,
    graph: &GraphState,
    log: Option<&DeltaLog>,
    params: Option<&PushParams>,
    cfg: &RunConfig,
    buckets: &BucketTable,
) -> Result<StepOutcome> {
    let snapshot = graph.snapshot_index();
    let mut outcome = StepOutcome {
        pushes: 0,
        work: 0,
        activated: false,
    };
    if node.ppr.is_initialized() {
        if let Some(log) = log {
            node.ppr.replay(log, cfg.alpha)?;
        }
    } else if graph.degree(node.node) > 0 {
        node.ppr = PprState::new(node.node);
        node.activated_at = Some(snapshot);
        outcome.activated = true;
    }
    if node.ppr.is_initialized() {
        if let Some(params) = params {
            let stats = node.ppr.forward_push(graph, params)?;
            outcome.pushes = stats.pushes;
            outcome.work = stats.work;
        }
    }
    let vector = if node.ppr.is_initialized() {
        buckets.project(node.ppr.estimate(), graph.node_count())
    } else {
        EmbeddingVector::zeros(buckets.config().dim())
    };
    node.history.push(HistoryEntry {
        snapshot,
        degree: Some(graph.degree(node.node)),
        initialized: node.ppr.is_initialized(),
        vector,
    });
    Ok(outcome)
}

impl PipelineState {
    /// Sets up tracking on the initial graph. Subset nodes that already have
    /// edges are pushed to `epsilon / m_0`; the rest wait for their first edge.
    pub fn initialize(
        g0: GraphState,
        subset: impl IntoIterator<Item = NodeId>,
        cfg: RunConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let mut nodes: Vec<NodeId> = subset.into_iter().collect();
        nodes.sort_unstable();
        nodes.dedup();
        if nodes.is_empty() {
            return Err(Error::EmptySubset);
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.parallelism)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
        let tracked = nodes
            .into_iter()
            .map(|node| TrackedNode {
                node,
                ppr: PprState::pending(node),
                history: Vec::new(),
                activated_at: None,
            })
            .collect();
        let buckets = BucketTable::new(cfg.hash.clone());
        let mut state = PipelineState {
            cfg,
            graph: g0,
            tracked,
            reports: Vec::new(),
            buckets,
            pool,
        };
        state.advance(None, 0, 0)?;
        Ok(state)
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn graph(&self) -> &GraphState {
        &self.graph
    }

    pub fn tracked(&self) -> &[TrackedNode] {
        &self.tracked
    }

    pub fn tracked_node(&self, node: NodeId) -> Option<&TrackedNode> {
        self.tracked
            .binary_search_by_key(&node, |t| t.node)
            .ok()
            .map(|i| &self.tracked[i])
    }

    /// Corrupts one residual entry of a tracked source. Test hook for the
    /// invariant checks.
    #[doc(hidden)]
    pub fn inject_residual_fault(&mut self, source: NodeId, node: NodeId, amount: f64) -> Result<()> {
        let i = self
            .tracked
            .binary_search_by_key(&source, |t| t.node)
            .map_err(|_| Error::InvalidParameter(format!("node {source} is not tracked")))?;
        let ppr = &mut self.tracked[i].ppr;
        if !ppr.is_initialized() {
            return Err(Error::NotInitialized(source));
        }
        ppr.inject_residual_fault(node, amount);
        Ok(())
    }

    pub fn reports(&self) -> &[SnapshotReport] {
        &self.reports
    }

    pub fn histories(&self) -> BTreeMap<NodeId, EmbeddingHistory> {
        self.tracked
            .iter()
            .map(|t| (t.node, t.history.clone()))
            .collect()
    }

    pub fn into_histories(self) -> BTreeMap<NodeId, EmbeddingHistory> {
        self.tracked
            .into_iter()
            .map(|t| (t.node, t.history))
            .collect()
    }

    /// Delta index expected next.
    pub fn next_snapshot(&self) -> usize {
        self.graph.snapshot_index() + 1
    }

    /// Applies one delta and refreshes every tracked node. Returns the current
    /// embedding of every initialized tracked node.
    pub fn process_snapshot(
        &mut self,
        delta: &SnapshotDelta,
    ) -> Result<BTreeMap<NodeId, EmbeddingVector>> {
        let log = self.graph.apply_delta_logged(delta)?;
        let counts = log.counts();
        self.advance(Some(&log), counts.applied, counts.ignored)?;
        Ok(self.current_embeddings())
    }

    fn current_embeddings(&self) -> BTreeMap<NodeId, EmbeddingVector> {
        self.tracked
            .iter()
            .filter(|t| t.ppr.is_initialized())
            .filter_map(|t| t.history.last().map(|h| (t.node, h.vector.clone())))
            .collect()
    }

    fn advance(&mut self, log: Option<&DeltaLog>, applied: usize, ignored: usize) -> Result<()> {
        let m_t = self.graph.degree_sum();
        let params = if m_t > 0 {
            Some(self.cfg.push_params(self.cfg.epsilon_for(m_t)?)?)
        } else {
            None
        };
        self.buckets.cover(self.graph.id_bound());
        let graph = &self.graph;
        let cfg = &self.cfg;
        let buckets = &self.buckets;
        let tracked = &mut self.tracked;
        let outcomes: Vec<Result<StepOutcome>> = self.pool.install(|| {
            tracked
                .par_iter_mut()
                .map(|t| step(t, graph, log, params.as_ref(), cfg, buckets).map_err(|e| e.for_source(t.node)))
                .collect()
        });

        let mut report = SnapshotReport {
            snapshot: self.graph.snapshot_index(),
            degree_sum: m_t,
            node_count: self.graph.node_count(),
            epsilon_t: params.map(|p| p.epsilon_t),
            applied,
            ignored,
            pushes: 0,
            work: 0,
            activated: Vec::new(),
        };
        for (t, outcome) in self.tracked.iter().zip(outcomes) {
            let outcome = outcome?;
            report.pushes += outcome.pushes;
            report.work += outcome.work;
            if outcome.activated {
                report.activated.push(t.node);
            }
        }
        self.reports.push(report);
        Ok(())
    }
}

/// Runs a whole stream: the first block is `G^0`, each later block a delta.
pub fn run(
    stream: &EventStream,
    subset: impl IntoIterator<Item = NodeId>,
    cfg: RunConfig,
) -> Result<PipelineState> {
    let g0 = GraphState::from_events(&stream.initial)?;
    let mut state = PipelineState::initialize(g0, subset, cfg)?;
    for delta in &stream.deltas {
        state.process_snapshot(delta)?;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeEvent;
    use crate::oracle;

    fn node(i: u32) -> NodeId {
        NodeId(i)
    }

    #[test]
    fn adaptive_epsilon_values() {
        assert!((adaptive_epsilon(0.1, 1000).unwrap() - 1e-4).abs() < 1e-18);
        assert_eq!(adaptive_epsilon(0.1, 2).unwrap(), 0.05);
        assert_eq!(adaptive_epsilon(2.0, 1).unwrap(), 2.0);
        assert_eq!(adaptive_epsilon(0.1, 0), Err(Error::NoEdges));
    }

    #[test]
    fn config_validation() {
        let bad = [
            RunConfig {
                epsilon: 3.0,
                ..RunConfig::default()
            },
            RunConfig {
                alpha: 0.0,
                ..RunConfig::default()
            },
            RunConfig {
                alpha: 1.5,
                ..RunConfig::default()
            },
            RunConfig {
                parallelism: 0,
                ..RunConfig::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
        let edge = RunConfig {
            epsilon: 2.0,
            alpha: 1.0,
            ..RunConfig::default()
        };
        edge.validate().unwrap();
    }

    #[test]
    fn initializes_present_nodes() {
        let g0 = GraphState::from_edges([(0, 1)]).unwrap();
        let ps = PipelineState::initialize(g0, [node(0)], RunConfig::default()).unwrap();
        assert_eq!(ps.reports()[0].epsilon_t, Some(0.05));
        let t = ps.tracked_node(node(0)).unwrap();
        assert!(t.ppr.is_initialized());
        assert_eq!(t.activated_at, Some(0));
        assert_eq!(t.history.len(), 1);
    }

    #[test]
    fn absent_nodes_wait() {
        let g0 = GraphState::from_edges([(0, 1)]).unwrap();
        let ps = PipelineState::initialize(g0, [node(5)], RunConfig::default()).unwrap();
        let t = ps.tracked_node(node(5)).unwrap();
        assert!(!t.ppr.is_initialized());
        assert!(!t.history[0].initialized);
        assert!(t.history[0].vector.is_zero());
    }

    #[test]
    fn empty_initial_graph_defers_until_first_edge() {
        let mut ps =
            PipelineState::initialize(GraphState::new(), [node(0)], RunConfig::default()).unwrap();
        assert_eq!(ps.reports()[0].epsilon_t, None);
        let out = ps
            .process_snapshot(&SnapshotDelta::new(1, vec![EdgeEvent::insert(2, 3)]))
            .unwrap();
        assert!(out.is_empty());
        let out = ps
            .process_snapshot(&SnapshotDelta::new(2, vec![EdgeEvent::insert(0, 2)]))
            .unwrap();
        assert_eq!(out.len(), 1);
        let t = ps.tracked_node(node(0)).unwrap();
        assert_eq!(t.activated_at, Some(2));
        assert_eq!(ps.reports()[2].activated, vec![node(0)]);
        let snapshots: Vec<usize> = t.history.iter().map(|h| h.snapshot).collect();
        assert_eq!(snapshots, vec![0, 1, 2]);
    }

    #[test]
    fn empty_subset_rejected() {
        let err = PipelineState::initialize(GraphState::new(), [], RunConfig::default());
        assert!(matches!(err, Err(Error::EmptySubset)));
    }

    #[test]
    fn empty_delta_repeats_embedding() {
        let g0 = GraphState::from_edges([(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]).unwrap();
        let mut ps = PipelineState::initialize(g0, [node(0), node(3)], RunConfig::default()).unwrap();
        let before = ps.histories();
        let out = ps.process_snapshot(&SnapshotDelta::new(1, vec![])).unwrap();
        for (n, w) in out {
            assert_eq!(w, before[&n][0].vector);
        }
    }

    #[test]
    fn inserted_edge_moves_embedding_within_bound() {
        let g0 = GraphState::from_edges([(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (1, 3)]).unwrap();
        let cfg = RunConfig {
            hash: HashConfig::from_seed(16, 7).unwrap(),
            ..RunConfig::default()
        };
        let mut ps = PipelineState::initialize(g0, [node(0)], cfg).unwrap();
        let before = ps.histories()[&node(0)][0].vector.clone();
        let out = ps
            .process_snapshot(&SnapshotDelta::new(1, vec![EdgeEvent::insert(0, 2)]))
            .unwrap();
        assert_ne!(out[&node(0)], before);
        let pi = oracle::exact_ppr(ps.graph(), node(0), 0.15, 1e-12).unwrap();
        let p = ps.tracked_node(node(0)).unwrap().ppr.estimate();
        assert!(pi.l1_error(p) <= 0.1);
    }

    #[test]
    fn sequencing_enforced() {
        let mut ps =
            PipelineState::initialize(GraphState::new(), [node(0)], RunConfig::default()).unwrap();
        assert!(matches!(
            ps.process_snapshot(&SnapshotDelta::new(3, vec![])),
            Err(Error::Sequencing { .. })
        ));
    }

    #[test]
    fn static_single_snapshot_run() {
        let stream = EventStream::from_blocks(vec![vec![
            EdgeEvent::insert(0, 1),
            EdgeEvent::insert(1, 2),
            EdgeEvent::insert(0, 2),
        ]]);
        let cfg = RunConfig::default();
        let ps = run(&stream, [node(1)], cfg.clone()).unwrap();
        let h = &ps.histories()[&node(1)];
        assert_eq!(h.len(), 1);

        let g = GraphState::from_events(&stream.initial).unwrap();
        let mut s = PprState::new(node(1));
        let params = PushParams::new(cfg.alpha, cfg.epsilon / 6.0).unwrap();
        s.forward_push(&g, &params).unwrap();
        assert_eq!(h[0].vector, crate::hashing::project(s.estimate(), 3, &cfg.hash));
    }
}
