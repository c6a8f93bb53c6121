//! Dynamic personalized PageRank embeddings for a tracked node subset.
//!
//! Per-source forward-push states are kept consistent with an evolving
//! undirected graph by local adjustments, refreshed to a snapshot-dependent
//! precision and hashed into a fixed-size embedding.

pub mod analytics;
pub mod commute;
mod error;
pub mod export;
pub mod graph;
pub mod hashing;
pub mod oracle;
pub mod pipeline;
pub mod ppr;
mod prefetch;
pub mod sparse;
pub mod stream;

pub use error::{Error, Result};
pub use graph::{EdgeEvent, EdgeOp, GraphState, NodeId, SnapshotDelta};
pub use hashing::{project, EmbeddingVector, HashConfig};
pub use pipeline::{run, PipelineState, Precision, RunConfig};
pub use ppr::{PprState, PushParams};
pub use sparse::SparseVector;
pub use stream::{EventStream, Segmentation};
