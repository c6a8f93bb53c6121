//! COMMUTE: a first-order random-projection baseline over insertion-only
//! streams. Each inserted edge mixes the two endpoint vectors.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::graph::{ApplyResult, EdgeEvent, EdgeOp, GraphState, NodeId};
use crate::hashing::EmbeddingVector;
use crate::pipeline::{EmbeddingHistory, HistoryEntry};
use crate::stream::EventStream;

pub const GAUSSIAN_VARIANCE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitMode {
    /// Entries drawn from `Normal(0, 0.1)`.
    #[default]
    Gaussian,
    /// Entries drawn from `Uniform(-0.5, 0.5) / dim`.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CommuteConfig {
    pub dim: usize,
    pub init_mode: InitMode,
    pub seed: u64,
}

impl CommuteConfig {
    pub fn new(dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dim must be at least 1".into()));
        }
        Ok(CommuteConfig {
            dim,
            init_mode: InitMode::Gaussian,
            seed,
        })
    }

    pub fn with_init_mode(mut self, mode: InitMode) -> Self {
        self.init_mode = mode;
        self
    }
}

#[derive(Debug, Clone)]
pub struct CommuteState {
    cfg: CommuteConfig,
    vectors: BTreeMap<NodeId, EmbeddingVector>,
}

impl CommuteState {
    pub fn new(cfg: CommuteConfig) -> Self {
        CommuteState {
            cfg,
            vectors: BTreeMap::new(),
        }
    }

    pub fn config(&self) -> &CommuteConfig {
        &self.cfg
    }

    pub fn get(&self, node: NodeId) -> Option<&EmbeddingVector> {
        self.vectors.get(&node)
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.vectors.contains_key(&node)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Overwrites the vector of `node`.
    pub fn set(&mut self, node: NodeId, vector: EmbeddingVector) -> Result<()> {
        if vector.dim() != self.cfg.dim {
            return Err(Error::DimensionMismatch {
                left: self.cfg.dim,
                right: vector.dim(),
            });
        }
        self.vectors.insert(node, vector);
        Ok(())
    }

    /// Draws the initial vector of `node`; the draw depends only on the seed,
    /// the node and the dimension.
    pub fn init(&mut self, node: NodeId) -> Result<&EmbeddingVector> {
        if self.vectors.contains_key(&node) {
            return Err(Error::AlreadyInitialized(node));
        }
        let vector = initial_vector(&self.cfg, node);
        Ok(self.vectors.entry(node).or_insert(vector))
    }

    fn ensure(&mut self, node: NodeId) {
        if !self.vectors.contains_key(&node) {
            let vector = initial_vector(&self.cfg, node);
            self.vectors.insert(node, vector);
        }
    }

    /// Updates both endpoints of an insertion already applied to `g`.
    pub fn apply_event(&mut self, e: &EdgeEvent, g: &GraphState) -> Result<()> {
        if e.op == EdgeOp::Delete {
            return Err(Error::UnsupportedEvent(format!(
                "COMMUTE accepts insertions only, got delete ({}, {})",
                e.u, e.v
            )));
        }
        let (du, dv) = (g.degree(e.u), g.degree(e.v));
        if du == 0 || dv == 0 {
            return Err(Error::DegenerateNode(if du == 0 { e.u } else { e.v }));
        }
        self.ensure(e.u);
        self.ensure(e.v);
        let (du, dv) = (du as f64, dv as f64);
        let wu = self.vectors[&e.u].combine(du / (du + 1.0), &self.vectors[&e.v], 1.0 / du);
        let wv = self.vectors[&e.v].combine(dv / (dv + 1.0), &wu, 1.0 / dv);
        self.vectors.insert(e.u, wu);
        self.vectors.insert(e.v, wv);
        Ok(())
    }
}

fn initial_vector(cfg: &CommuteConfig, node: NodeId) -> EmbeddingVector {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(u64::from(node.0));
    let values: Vec<f64> = match cfg.init_mode {
        InitMode::Gaussian => {
            let normal = Normal::new(0.0, GAUSSIAN_VARIANCE.sqrt()).expect("valid normal");
            (0..cfg.dim).map(|_| normal.sample(&mut rng)).collect()
        }
        InitMode::Uniform => {
            let scale = cfg.dim as f64;
            (0..cfg.dim)
                .map(|_| rng.random_range(-0.5..=0.5) / scale)
                .collect()
        }
    };
    EmbeddingVector::from(values)
}

/// Runs COMMUTE over a stream, recording subset vectors after every block.
/// The whole stream is checked for deletions before any update.
pub fn commute_run(
    stream: &EventStream,
    subset: impl IntoIterator<Item = NodeId>,
    cfg: CommuteConfig,
) -> Result<BTreeMap<NodeId, EmbeddingHistory>> {
    if let Some(e) = stream.events().find(|e| e.op == EdgeOp::Delete) {
        return Err(Error::UnsupportedEvent(format!(
            "COMMUTE accepts insertions only, got delete ({}, {}) at timestamp {}",
            e.u, e.v, e.timestamp
        )));
    }
    let mut nodes: Vec<NodeId> = subset.into_iter().collect();
    nodes.sort_unstable();
    nodes.dedup();
    if nodes.is_empty() {
        return Err(Error::EmptySubset);
    }

    let mut state = CommuteState::new(cfg);
    for &n in &nodes {
        state.init(n)?;
    }
    let mut graph = GraphState::new();
    let mut histories: BTreeMap<NodeId, EmbeddingHistory> =
        nodes.iter().map(|&n| (n, Vec::new())).collect();

    for (snapshot, block) in stream.blocks().enumerate() {
        for e in block {
            if graph.apply_event(e)? == ApplyResult::Applied {
                state.apply_event(e, &graph)?;
            }
        }
        for (&n, history) in histories.iter_mut() {
            history.push(HistoryEntry {
                snapshot,
                degree: Some(graph.degree(n)),
                initialized: true,
                vector: state.vectors[&n].clone(),
            });
        }
    }
    Ok(histories)
}
