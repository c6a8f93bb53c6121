//! Embedding movement and change ranking.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::hashing::EmbeddingVector;
use crate::pipeline::EmbeddingHistory;

/// Default minimum net degree change for a record to be ranked.
pub const DEFAULT_MIN_DEGREE_DELTA: i64 = 10;

/// Cosine distance `1 - cos(a, b)`, clamped to `[0, 2]`. Exactly zero for
/// identical vectors and when either vector is all zeros.
pub fn movement(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    if a.values() == b.values() {
        return Ok(0.0);
    }
    let na = a.norm();
    let nb = b.norm();
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok((1.0 - a.dot(b) / (na * nb)).clamp(0.0, 2.0))
}

/// Standard scores with the population standard deviation. All zeros when the
/// values do not vary.
pub fn zscores(values: &BTreeMap<NodeId, f64>) -> BTreeMap<NodeId, f64> {
    let n = values.len() as f64;
    if values.is_empty() {
        return BTreeMap::new();
    }
    let mean = values.values().sum::<f64>() / n;
    let var = values.values().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    values
        .iter()
        .map(|(&k, &x)| {
            let z = if sd > 0.0 { (x - mean) / sd } else { 0.0 };
            (k, z)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChangeRecord {
    pub node: NodeId,
    pub snapshot_from: usize,
    pub snapshot_to: usize,
    pub distance: f64,
    /// Net degree change across the step, when degrees are known.
    pub degree_delta: Option<i64>,
    pub zscore: f64,
}

/// One record per node and consecutive snapshot pair. Z-scores are taken over
/// all nodes of the same step.
pub fn change_records(histories: &BTreeMap<NodeId, EmbeddingHistory>) -> Result<Vec<ChangeRecord>> {
    let mut steps: BTreeMap<usize, Vec<ChangeRecord>> = BTreeMap::new();
    for (&node, history) in histories {
        for pair in history.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            let degree_delta = match (a.degree, b.degree) {
                (Some(x), Some(y)) => Some(y as i64 - x as i64),
                _ => None,
            };
            steps.entry(b.snapshot).or_default().push(ChangeRecord {
                node,
                snapshot_from: a.snapshot,
                snapshot_to: b.snapshot,
                distance: movement(&a.vector, &b.vector)?,
                degree_delta,
                zscore: 0.0,
            });
        }
    }
    let mut out = Vec::new();
    for (_, mut records) in steps {
        let distances: BTreeMap<NodeId, f64> =
            records.iter().map(|r| (r.node, r.distance)).collect();
        let z = zscores(&distances);
        for r in &mut records {
            r.zscore = z[&r.node];
        }
        out.extend(records);
    }
    Ok(out)
}

/// Drops records whose known degree change is at most `min_degree_delta`, then
/// orders by snapshot, descending z-score and node id.
pub fn rank_changes(mut records: Vec<ChangeRecord>, min_degree_delta: i64) -> Vec<ChangeRecord> {
    records.retain(|r| r.degree_delta.is_none_or(|d| d > min_degree_delta));
    records.sort_by(|a, b| {
        a.snapshot_to
            .cmp(&b.snapshot_to)
            .then(b.zscore.total_cmp(&a.zscore))
            .then(a.node.cmp(&b.node))
    });
    records
}
