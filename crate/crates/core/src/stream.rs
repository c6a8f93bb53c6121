//! Edge-event files.
//!
//! One event per line, `timestamp<TAB>op<TAB>u<TAB>v`, with `op` either `+`
//! (insert) or `-` (delete). A line starting with `#snapshot` closes the
//! current block; other `#` lines and blank lines are ignored. Timestamps must
//! be non-decreasing.
//!
//! The first block is the initial graph `G^0`; each later block is the delta
//! producing the next snapshot. Events after the last marker form a final
//! block when there are any.

use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{EdgeEvent, EdgeOp, NodeId, SnapshotDelta, MAX_NODE_ID};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segmentation {
    /// Blocks end at `#snapshot` lines.
    Markers,
    /// Blocks of a fixed number of events; markers are rejected.
    Every(usize),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventStream {
    pub initial: Vec<EdgeEvent>,
    pub deltas: Vec<SnapshotDelta>,
}

impl EventStream {
    /// First block becomes `G^0`, the rest become deltas `1..`.
    pub fn from_blocks(blocks: Vec<Vec<EdgeEvent>>) -> Self {
        let mut blocks = blocks.into_iter();
        let initial = blocks.next().unwrap_or_default();
        let deltas = blocks
            .enumerate()
            .map(|(i, events)| SnapshotDelta::new(i + 1, events))
            .collect();
        EventStream { initial, deltas }
    }

    pub fn event_count(&self) -> usize {
        self.initial.len() + self.deltas.iter().map(|d| d.events.len()).sum::<usize>()
    }

    /// Snapshots including `G^0`.
    pub fn snapshot_count(&self) -> usize {
        1 + self.deltas.len()
    }

    pub fn events(&self) -> impl Iterator<Item = &EdgeEvent> {
        self.initial
            .iter()
            .chain(self.deltas.iter().flat_map(|d| d.events.iter()))
    }

    pub fn blocks(&self) -> impl Iterator<Item = &[EdgeEvent]> {
        std::iter::once(self.initial.as_slice())
            .chain(self.deltas.iter().map(|d| d.events.as_slice()))
    }
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_node(field: &str, line: usize) -> Result<NodeId> {
    let id: u32 = field
        .parse()
        .map_err(|_| parse_error(line, format!("invalid node id {field:?}")))?;
    if id > MAX_NODE_ID {
        return Err(parse_error(
            line,
            format!("node id {id} exceeds maximum {MAX_NODE_ID}"),
        ));
    }
    Ok(NodeId(id))
}

fn parse_event(text: &str, line: usize) -> Result<EdgeEvent> {
    let fields: Vec<&str> = text.split('\t').map(str::trim).collect();
    if fields.len() != 4 {
        return Err(parse_error(
            line,
            format!("expected 4 tab-separated fields, found {}", fields.len()),
        ));
    }
    let timestamp: i64 = fields[0]
        .parse()
        .map_err(|_| parse_error(line, format!("invalid timestamp {:?}", fields[0])))?;
    let op = match fields[1] {
        "+" => EdgeOp::Insert,
        "-" => EdgeOp::Delete,
        other => return Err(parse_error(line, format!("unknown op {other:?}"))),
    };
    let u = parse_node(fields[2], line)?;
    let v = parse_node(fields[3], line)?;
    if u == v {
        return Err(parse_error(line, format!("self-loop on node {u}")));
    }
    Ok(EdgeEvent {
        u,
        v,
        op,
        timestamp,
    })
}

pub fn parse_events(text: &str, segmentation: Segmentation) -> Result<EventStream> {
    if let Segmentation::Every(0) = segmentation {
        return Err(Error::InvalidParameter(
            "snapshot size must be at least 1".into(),
        ));
    }
    let mut blocks: Vec<Vec<EdgeEvent>> = Vec::new();
    let mut current: Vec<EdgeEvent> = Vec::new();
    let mut last_timestamp = i64::MIN;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with("#snapshot") {
            if let Segmentation::Every(_) = segmentation {
                return Err(parse_error(
                    line,
                    "snapshot markers cannot be combined with fixed-size snapshots",
                ));
            }
            blocks.push(std::mem::take(&mut current));
            continue;
        }
        if trimmed.starts_with('#') {
            continue;
        }
        let event = parse_event(raw, line)?;
        if event.timestamp < last_timestamp {
            return Err(parse_error(
                line,
                format!(
                    "timestamp {} precedes previous timestamp {last_timestamp}",
                    event.timestamp
                ),
            ));
        }
        last_timestamp = event.timestamp;
        current.push(event);
        if let Segmentation::Every(n) = segmentation {
            if current.len() == n {
                blocks.push(std::mem::take(&mut current));
            }
        }
    }
    if !current.is_empty() || blocks.is_empty() {
        blocks.push(current);
    }
    Ok(EventStream::from_blocks(blocks))
}

pub fn read_events(path: impl AsRef<Path>, segmentation: Segmentation) -> Result<EventStream> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
        line: 0,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    parse_events(&text, segmentation)
}

/// Renders a stream back into the file format, one marker after each block.
pub fn format_events(stream: &EventStream) -> String {
    let mut out = String::new();
    for block in stream.blocks() {
        for e in block {
            let op = match e.op {
                EdgeOp::Insert => '+',
                EdgeOp::Delete => '-',
            };
            out.push_str(&format!("{}\t{}\t{}\t{}\n", e.timestamp, op, e.u, e.v));
        }
        out.push_str("#snapshot\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const K3: &str = "# triangle\n1\t+\t0\t1\n2\t+\t1\t2\n#snapshot\n\n3\t+\t0\t2\n#snapshot\n";

    #[test]
    fn markers_split_blocks() {
        let s = parse_events(K3, Segmentation::Markers).unwrap();
        assert_eq!(s.initial.len(), 2);
        assert_eq!(s.deltas.len(), 1);
        assert_eq!(s.deltas[0].snapshot_index, 1);
        assert_eq!(s.deltas[0].events[0], EdgeEvent::insert(0, 2).at(3));
        assert_eq!(s.snapshot_count(), 2);
        assert_eq!(s.event_count(), 3);
    }

    #[test]
    fn trailing_events_form_a_block() {
        let s = parse_events("1\t+\t0\t1\n#snapshot\n2\t-\t0\t1\n", Segmentation::Markers).unwrap();
        assert_eq!(s.snapshot_count(), 2);
        assert_eq!(s.deltas[0].events[0].op, EdgeOp::Delete);
    }

    #[test]
    fn empty_blocks_between_markers() {
        let s = parse_events("1\t+\t0\t1\n#snapshot\n#snapshot\n", Segmentation::Markers).unwrap();
        assert_eq!(s.snapshot_count(), 2);
        assert!(s.deltas[0].events.is_empty());
    }

    #[test]
    fn fixed_size_blocks() {
        let text = "1\t+\t0\t1\n2\t+\t1\t2\n3\t+\t2\t3\n";
        let s = parse_events(text, Segmentation::Every(2)).unwrap();
        assert_eq!(s.initial.len(), 2);
        assert_eq!(s.deltas.len(), 1);
        assert!(parse_events(K3, Segmentation::Every(2)).is_err());
        assert!(parse_events(text, Segmentation::Every(0)).is_err());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("1\t+\t0\t1\n2\t*\t1\t2\n", 2),
            ("1\t+\t0\t0\n", 1),
            ("1\t+\t0\n", 1),
            ("x\t+\t0\t1\n", 1),
            ("5\t+\t0\t1\n4\t+\t1\t2\n", 2),
            ("1\t+\t0\t-3\n", 1),
        ];
        for (text, expected) in cases {
            match parse_events(text, Segmentation::Markers) {
                Err(Error::Parse { line, .. }) => assert_eq!(line, expected, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn format_round_trip() {
        let s = parse_events(K3, Segmentation::Markers).unwrap();
        let again = parse_events(&format_events(&s), Segmentation::Markers).unwrap();
        assert_eq!(s, again);
    }
}
