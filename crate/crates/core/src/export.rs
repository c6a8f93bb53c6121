//! Text formats for embeddings and change reports.
//!
//! Embedding files start with `#dynppe-embeddings<TAB>v1<TAB>dim=D<TAB>method=M`
//! followed by one `snapshot<TAB>node<TAB>c1,...,cD` row per tracked node and
//! snapshot, ordered by snapshot then node. Coordinates carry 9 significant
//! digits.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::analytics::ChangeRecord;
use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::hashing::EmbeddingVector;
use crate::pipeline::{EmbeddingHistory, HistoryEntry};

pub const EMBEDDING_MAGIC: &str = "#dynppe-embeddings";
pub const EMBEDDING_VERSION: &str = "v1";

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub dim: usize,
    pub method: String,
    pub rows: Vec<(usize, NodeId, EmbeddingVector)>,
}

impl EmbeddingTable {
    pub fn snapshot_count(&self) -> usize {
        let mut snapshots: Vec<usize> = self.rows.iter().map(|r| r.0).collect();
        snapshots.sort_unstable();
        snapshots.dedup();
        snapshots.len()
    }

    /// Groups rows into per-node histories. Degrees are unknown here.
    pub fn histories(&self) -> BTreeMap<NodeId, EmbeddingHistory> {
        let mut out: BTreeMap<NodeId, EmbeddingHistory> = BTreeMap::new();
        for (snapshot, node, vector) in &self.rows {
            out.entry(*node).or_default().push(HistoryEntry {
                snapshot: *snapshot,
                degree: None,
                initialized: !vector.is_zero(),
                vector: vector.clone(),
            });
        }
        for h in out.values_mut() {
            h.sort_by_key(|e| e.snapshot);
        }
        out
    }
}

pub fn format_embeddings(
    histories: &BTreeMap<NodeId, EmbeddingHistory>,
    dim: usize,
    method: &str,
) -> String {
    let mut rows: Vec<(usize, NodeId, &EmbeddingVector)> = histories
        .iter()
        .flat_map(|(&n, h)| h.iter().map(move |e| (e.snapshot, n, &e.vector)))
        .collect();
    rows.sort_by_key(|r| (r.0, r.1));

    let mut out = format!("{EMBEDDING_MAGIC}\t{EMBEDDING_VERSION}\tdim={dim}\tmethod={method}\n");
    for (snapshot, node, vector) in rows {
        let _ = write!(out, "{snapshot}\t{node}\t");
        for (i, x) in vector.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{x:.8e}");
        }
        out.push('\n');
    }
    out
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

pub fn parse_embeddings(text: &str) -> Result<EmbeddingTable> {
    let mut lines = text.lines().enumerate();
    let header = lines
        .next()
        .map(|(_, l)| l)
        .ok_or_else(|| parse_error(1, "empty embedding file"))?;
    let fields: Vec<&str> = header.split('\t').collect();
    if fields.len() != 4 || fields[0] != EMBEDDING_MAGIC || fields[1] != EMBEDDING_VERSION {
        return Err(parse_error(1, "missing or unsupported embedding header"));
    }
    let dim: usize = fields[2]
        .strip_prefix("dim=")
        .and_then(|d| d.parse().ok())
        .ok_or_else(|| parse_error(1, format!("bad dim field {:?}", fields[2])))?;
    let method = fields[3]
        .strip_prefix("method=")
        .ok_or_else(|| parse_error(1, format!("bad method field {:?}", fields[3])))?
        .to_string();

    let mut rows = Vec::new();
    for (i, raw) in lines {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = raw.split('\t').collect();
        if parts.len() != 3 {
            return Err(parse_error(line, "expected snapshot, node and coordinates"));
        }
        let snapshot: usize = parts[0]
            .parse()
            .map_err(|_| parse_error(line, format!("invalid snapshot {:?}", parts[0])))?;
        let node: u32 = parts[1]
            .parse()
            .map_err(|_| parse_error(line, format!("invalid node {:?}", parts[1])))?;
        let values = parts[2]
            .split(',')
            .map(|c| c.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|_| parse_error(line, "invalid coordinate"))?;
        if values.len() != dim {
            return Err(parse_error(
                line,
                format!("expected {dim} coordinates, found {}", values.len()),
            ));
        }
        rows.push((snapshot, NodeId(node), EmbeddingVector::from(values)));
    }
    Ok(EmbeddingTable { dim, method, rows })
}

pub const CHANGE_REPORT_HEADER: &str = "snapshot\tnode\tzscore\tmovement\tdegree_delta";

pub fn format_change_report(records: &[ChangeRecord]) -> String {
    let mut out = String::from(CHANGE_REPORT_HEADER);
    out.push('\n');
    for r in records {
        let delta = r
            .degree_delta
            .map_or_else(|| "NA".to_string(), |d| d.to_string());
        let _ = writeln!(
            out,
            "{}\t{}\t{:.6}\t{:.6}\t{}",
            r.snapshot_to, r.node, r.zscore, r.distance, delta
        );
    }
    out
}
