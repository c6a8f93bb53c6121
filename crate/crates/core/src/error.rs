use thiserror::Error;

use crate::graph::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("self-loop event on node {0} rejected")]
    SelfLoop(NodeId),

    #[error("snapshot out of sequence: expected index {expected}, got {got}")]
    Sequencing { expected: usize, got: usize },

    #[error("cannot push from node {0}: it has no neighbors")]
    DegenerateNode(NodeId),

    #[error("cannot push from node {0}: residual is zero")]
    ZeroResidual(NodeId),

    #[error("insertion gives node {0} its first edge while its estimate is nonzero")]
    DegenerateDenominator(NodeId),

    #[error("push work {work} exceeded ceiling {ceiling}")]
    BudgetExceeded { work: u64, ceiling: u64 },

    #[error("state for source {0} is not initialized")]
    NotInitialized(NodeId),

    #[error("node {0} is already initialized")]
    AlreadyInitialized(NodeId),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("tracked subset is empty")]
    EmptySubset,

    #[error("graph has no edges")]
    NoEdges,

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("unsupported topology: {0}")]
    UnsupportedTopology(String),

    #[error("graph too large for the oracle: {nodes} nodes, cap {cap}")]
    TooLarge { nodes: usize, cap: usize },

    #[error("power iteration did not converge within {0} iterations")]
    Divergence(usize),

    #[error("unsupported event: {0}")]
    UnsupportedEvent(String),

    #[error("graph audit failed: {0}")]
    Audit(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("source {node}: {source}")]
    Source {
        node: NodeId,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn for_source(self, node: NodeId) -> Self {
        Error::Source {
            node,
            source: Box::new(self),
        }
    }
}
