//! Approximate personalized PageRank maintained by forward push.
//!
//! A [`PprState`] holds the estimate `p` and residual `r` for one source. At
//! every point the pair satisfies
//!
//! ```text
//! pi_s(u) = p(u) + sum_v r(v) * pi_v(u)      for all u
//! ```
//!
//! Pushes move residual into the estimate without breaking that identity, and
//! [`PprState::adjust_for_event`] rescales `p(u)` so that `p(u) / d(u)` is
//! unchanged when an edge event changes `d(u)`, moving the difference into the
//! residuals of `u` and its new (or former) neighbor.

use std::collections::VecDeque;
use std::fmt::Write as _;


use crate::error::{Error, Result};
use crate::graph::{
    AppliedEvent, DeltaLog, EdgeEvent, EdgeOp, GraphState, GraphVersion, NodeId, SnapshotDelta,
};
use crate::sparse::SparseVector;

pub const DEFAULT_MAX_WORK: u64 = 10_000_000_000;

// Queue offsets at which upcoming pushes get their memory prefetched.
const PREFETCH_FAR: usize = 12;
const PREFETCH_MID: usize = 6;
const PREFETCH_NEAR: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PushParams {
    /// Teleport probability.
    pub alpha: f64,
    /// Laziness: fraction of the non-teleported mass a node keeps on push.
    pub beta: f64,
    /// Per-snapshot threshold; pushing stops once `|r(u)| <= epsilon_t * d(u)`.
    pub epsilon_t: f64,
    /// Ceiling on the work a single `forward_push` call may spend.
    pub max_work: u64,
}

impl PushParams {
    pub fn new(alpha: f64, epsilon_t: f64) -> Result<Self> {
        let params = PushParams {
            alpha,
            beta: 0.0,
            epsilon_t,
            max_work: DEFAULT_MAX_WORK,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_beta(mut self, beta: f64) -> Result<Self> {
        self.beta = beta;
        self.validate()?;
        Ok(self)
    }

    pub fn with_max_work(mut self, max_work: u64) -> Self {
        self.max_work = max_work;
        self
    }

    pub fn validate(&self) -> Result<()> {
        validate_alpha(self.alpha)?;
        if !(0.0..1.0).contains(&self.beta) {
            return Err(Error::InvalidParameter(format!(
                "beta must lie in [0, 1), got {}",
                self.beta
            )));
        }
        if !(self.epsilon_t > 0.0 && self.epsilon_t.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "epsilon_t must be positive, got {}",
                self.epsilon_t
            )));
        }
        Ok(())
    }
}

pub(crate) fn validate_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PushStats {
    pub pushes: u64,
    pub work: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Positive,
    Negative,
}

impl Phase {
    #[inline]
    fn violates(self, r: f64, degree: usize, epsilon_t: f64) -> bool {
        if degree == 0 {
            return false;
        }
        let bound = epsilon_t * degree as f64;
        match self {
            Phase::Positive => r > bound,
            Phase::Negative => r < -bound,
        }
    }
}

/// Threshold and graph version at which every residual was last within
/// bounds, plus the nodes whose residual or degree changed since.
#[derive(Debug, Clone, PartialEq)]
struct Settled {
    epsilon_t: f64,
    version: GraphVersion,
    touched: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PprState {
    source: NodeId,
    estimate: SparseVector,
    residual: SparseVector,
    work: u64,
    initialized: bool,
    settled: Option<Settled>,
}

impl PprState {
    /// Fresh state: `p = 0`, `r = 1_s`.
    pub fn new(source: NodeId) -> Self {
        PprState {
            source,
            estimate: SparseVector::new(),
            residual: SparseVector::unit(source),
            work: 0,
            initialized: true,
            settled: None,
        }
    }

    /// Placeholder for a source that has not yet appeared in the graph.
    pub fn pending(source: NodeId) -> Self {
        PprState {
            source,
            estimate: SparseVector::new(),
            residual: SparseVector::new(),
            work: 0,
            initialized: false,
            settled: None,
        }
    }

    pub fn from_parts(source: NodeId, estimate: SparseVector, residual: SparseVector) -> Self {
        PprState {
            source,
            estimate,
            residual,
            work: 0,
            initialized: true,
            settled: None,
        }
    }

    pub fn source(&self) -> NodeId {
        self.source
    }

    pub fn estimate(&self) -> &SparseVector {
        &self.estimate
    }

    pub fn residual(&self) -> &SparseVector {
        &self.residual
    }

    /// Accumulated `sum d(u)` over every push executed on this state.
    pub fn work_counter(&self) -> u64 {
        self.work
    }

    pub fn is_initialized(&self) -> bool {
        self.initialized
    }

    pub fn residual_l1(&self) -> f64 {
        self.residual.l1_norm()
    }

    pub fn estimate_nnz(&self) -> usize {
        self.estimate.nnz()
    }

    /// Adds `amount` to one residual entry without touching anything else.
    /// Breaks the push invariant on purpose; used to check that the invariant
    /// checks can fail.
    #[doc(hidden)]
    pub fn inject_residual_fault(&mut self, node: NodeId, amount: f64) {
        self.residual.add(node, amount);
        self.settled = None;
    }

    /// One push at `u`.
    pub fn push(&mut self, u: NodeId, g: &GraphState, params: &PushParams) -> Result<()> {
        if g.degree(u) == 0 {
            return Err(Error::DegenerateNode(u));
        }
        if self.residual.get(u) == 0.0 {
            return Err(Error::ZeroResidual(u));
        }
        self.settled = None;
        self.push_unchecked(u, g, params, |_, _, _| {});
        Ok(())
    }

    /// Pushes at `u`, reporting each neighbor with its residual before and
    /// after the update.
    #[inline]
    fn push_unchecked(
        &mut self,
        u: NodeId,
        g: &GraphState,
        params: &PushParams,
        mut touched: impl FnMut(NodeId, f64, f64),
    ) {
        let r_u = self.residual.get(u);
        let neighbors = g.neighbors(u);
        let degree = neighbors.len();
        self.estimate.add(u, params.alpha * r_u);
        let share = (1.0 - params.alpha) * r_u * (1.0 - params.beta) / degree as f64;
        for &v in neighbors {
            let (before, after) = self.residual.add_with_previous(v, share);
            touched(v, before, after);
        }
        self.residual
            .set(u, (1.0 - params.alpha) * r_u * params.beta);
        self.work += degree as u64;
    }

    /// Pushes until every node with `d(u) >= 1` has `|r(u)| <= epsilon_t * d(u)`.
    /// Positive residuals are drained first, then negative ones, each from a
    /// FIFO frontier. Zero-degree nodes keep their residual.
    pub fn forward_push(&mut self, g: &GraphState, params: &PushParams) -> Result<PushStats> {
        self.forward_push_observed(g, params, |_| {})
    }

    /// [`forward_push`](Self::forward_push), calling `observe` after every push.
    pub fn forward_push_observed(
        &mut self,
        g: &GraphState,
        params: &PushParams,
        mut observe: impl FnMut(&PprState),
    ) -> Result<PushStats> {
        if !self.initialized {
            return Err(Error::NotInitialized(self.source));
        }
        params.validate()?;
        let eps = params.epsilon_t;

        // Untouched nodes already satisfy a threshold no looser than `eps`.
        let candidates: Vec<NodeId> = match self.settled.take() {
            Some(settled) if settled.version == g.version() && settled.epsilon_t <= eps => {
                settled.touched
            }
            _ => self.residual.iter().map(|(u, _)| u).collect(),
        };
        let mut positive = Vec::new();
        let mut negative = Vec::new();
        for u in candidates {
            let (r, d) = (self.residual.get(u), g.degree(u));
            if Phase::Positive.violates(r, d, eps) {
                positive.push(u);
            } else if Phase::Negative.violates(r, d, eps) {
                negative.push(u);
            }
        }

        let mut stats = PushStats::default();
        self.drain(g, params, Phase::Positive, positive, &mut stats, &mut observe)?;
        // Positive pushes only raise residuals, so no new negative violators.
        self.drain(g, params, Phase::Negative, negative, &mut stats, &mut observe)?;
        self.settled = Some(Settled {
            epsilon_t: eps,
            version: g.version(),
            touched: Vec::new(),
        });
        Ok(stats)
    }

    fn drain(
        &mut self,
        g: &GraphState,
        params: &PushParams,
        phase: Phase,
        mut seeds: Vec<NodeId>,
        stats: &mut PushStats,
        observe: &mut impl FnMut(&PprState),
    ) -> Result<()> {
        let eps = params.epsilon_t;
        seeds.retain(|&u| phase.violates(self.residual.get(u), g.degree(u), eps));
        seeds.sort_unstable();
        seeds.dedup();
        // Within a phase residuals only move toward violation until the node
        // is pushed, so a node is queued exactly when it violates.
        let mut queue: VecDeque<NodeId> = seeds.into();

        while let Some(u) = queue.pop_front() {
            if let Some(&w) = queue.get(PREFETCH_FAR) {
                g.prefetch_node(w);
                self.residual.prefetch(w);
                self.estimate.prefetch(w);
            }
            if let Some(&w) = queue.get(PREFETCH_MID) {
                g.prefetch_neighbors(w);
            }
            if let Some(&w) = queue.get(PREFETCH_NEAR) {
                for &x in g.neighbors(w) {
                    self.residual.prefetch(x);
                }
            }
            let degree = g.degree(u);
            if !phase.violates(self.residual.get(u), degree, eps) {
                continue;
            }
            self.push_unchecked(u, g, params, |v, before, after| {
                let d = g.degree(v);
                if phase.violates(after, d, eps) && !phase.violates(before, d, eps) {
                    queue.push_back(v);
                }
            });
            if phase.violates(self.residual.get(u), degree, eps) {
                queue.push_back(u);
            }
            stats.pushes += 1;
            stats.work += degree as u64;
            if stats.work > params.max_work {
                return Err(Error::BudgetExceeded {
                    work: stats.work,
                    ceiling: params.max_work,
                });
            }
            observe(self);
        }
        Ok(())
    }

    /// Restores the push invariant after `e` has been applied to `g`.
    pub fn adjust_for_event(&mut self, e: &EdgeEvent, g: &GraphState, alpha: f64) -> Result<()> {
        self.adjust_applied(
            &AppliedEvent {
                u: e.u,
                v: e.v,
                op: e.op,
                degree_u: g.degree(e.u),
                degree_v: g.degree(e.v),
                version: g.version(),
            },
            alpha,
        )
    }

    /// Same as [`adjust_for_event`](Self::adjust_for_event), with the
    /// post-event degrees taken from the delta log.
    pub fn adjust_applied(&mut self, e: &AppliedEvent, alpha: f64) -> Result<()> {
        if !self.initialized {
            return Err(Error::NotInitialized(self.source));
        }
        validate_alpha(alpha)?;
        self.settled = self.settled.take().and_then(|mut settled| {
            e.version.follows(settled.version).then(|| {
                settled.version = e.version;
                settled.touched.extend([e.u, e.v]);
                settled
            })
        });
        self.adjust_half(e.u, e.v, e.op, e.degree_u, alpha)?;
        self.adjust_half(e.v, e.u, e.op, e.degree_v, alpha)
    }

    fn adjust_half(
        &mut self,
        u: NodeId,
        v: NodeId,
        op: EdgeOp,
        degree_u: usize,
        alpha: f64,
    ) -> Result<()> {
        let p_u = self.estimate.get(u);
        if p_u == 0.0 {
            return Ok(());
        }
        let delta = match op {
            EdgeOp::Insert => {
                if degree_u <= 1 {
                    return Err(Error::DegenerateDenominator(u));
                }
                p_u / (degree_u - 1) as f64
            }
            EdgeOp::Delete => -p_u / (degree_u + 1) as f64,
        };
        self.estimate.add(u, delta);
        self.residual.add(u, -delta / alpha);
        self.residual.add(v, delta / alpha - delta);
        Ok(())
    }

    /// Applies the adjustments for every event in a delta log, in order.
    pub fn replay(&mut self, log: &DeltaLog, alpha: f64) -> Result<()> {
        for e in &log.applied {
            self.adjust_applied(e, alpha)?;
        }
        Ok(())
    }

    /// Applies `delta` to `g`, adjusts this state event by event, then pushes
    /// at `params.epsilon_t`. For several sources sharing one graph, apply the
    /// delta once with [`GraphState::apply_delta_logged`] and [`replay`](Self::replay)
    /// the log per source instead.
    pub fn update_batch(
        &mut self,
        delta: &SnapshotDelta,
        g: &mut GraphState,
        params: &PushParams,
    ) -> Result<PushStats> {
        if !self.initialized {
            return Err(Error::NotInitialized(self.source));
        }
        params.validate()?;
        let log = g.apply_delta_logged(delta)?;
        self.replay(&log, params.alpha)?;
        self.forward_push(g, params)
    }

    /// `node<TAB>p<TAB>r` per line in ascending node order, over the union of
    /// both supports.
    pub fn dump(&self) -> String {
        let mut nodes: Vec<NodeId> = self
            .estimate
            .iter()
            .chain(self.residual.iter())
            .map(|(u, _)| u)
            .collect();
        nodes.sort_unstable();
        nodes.dedup();
        let mut out = String::new();
        for u in nodes {
            let _ = writeln!(
                out,
                "{}\t{:e}\t{:e}",
                u,
                self.estimate.get(u),
                self.residual.get(u)
            );
        }
        out
    }
}
