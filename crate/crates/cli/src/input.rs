use std::path::Path;

use dynppe::{EventStream, GraphState, NodeId};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::{CliError, StreamArgs};

pub struct Input {
    pub bytes: Vec<u8>,
    pub sha256: String,
}

pub fn read(path: &Path) -> Result<Input, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let sha256 = hex(&Sha256::digest(&bytes));
    Ok(Input { bytes, sha256 })
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn utf8<'a>(path: &Path, input: &'a Input) -> Result<&'a str, CliError> {
    std::str::from_utf8(&input.bytes)
        .map_err(|e| CliError::Usage(format!("{}: not UTF-8: {e}", path.display())))
}

pub fn load_stream(args: &StreamArgs) -> Result<(EventStream, Input), CliError> {
    let input = read(&args.events)?;
    let text = utf8(&args.events, &input)?;
    let stream = dynppe::stream::parse_events(text, args.segmentation())
        .map_err(|e| CliError::Usage(format!("{}: {e}", args.events.display())))?;
    Ok((stream, input))
}

/// One node id per line; blank lines and `#` comments are skipped.
pub fn parse_subset(text: &str) -> Result<Vec<NodeId>, String> {
    let mut nodes = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let id: u32 = line
            .parse()
            .map_err(|_| format!("line {}: invalid node id {line:?}", i + 1))?;
        if id > dynppe::graph::MAX_NODE_ID {
            return Err(format!("line {}: node id {id} out of range", i + 1));
        }
        nodes.push(NodeId(id));
    }
    if nodes.is_empty() {
        return Err("subset file lists no nodes".into());
    }
    Ok(nodes)
}

pub fn load_subset(path: &Path) -> Result<(Vec<NodeId>, Input), CliError> {
    let input = read(path)?;
    let nodes = parse_subset(utf8(path, &input)?)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok((nodes, input))
}

#[derive(Debug, Clone, Serialize)]
pub struct SnapshotDigest {
    pub snapshot: usize,
    pub events: usize,
    pub node_count: usize,
    pub degree_sum: u64,
}

/// Replays the stream and returns the per-snapshot digests and the final graph.
pub fn replay(stream: &EventStream) -> Result<(Vec<SnapshotDigest>, GraphState), CliError> {
    let mut g = GraphState::from_events(&stream.initial)?;
    let mut digests = vec![SnapshotDigest {
        snapshot: 0,
        events: stream.initial.len(),
        node_count: g.node_count(),
        degree_sum: g.degree_sum(),
    }];
    for delta in &stream.deltas {
        g.apply_delta(delta)?;
        digests.push(SnapshotDigest {
            snapshot: delta.snapshot_index,
            events: delta.events.len(),
            node_count: g.node_count(),
            degree_sum: g.degree_sum(),
        });
    }
    Ok((digests, g))
}

pub fn write_output(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
