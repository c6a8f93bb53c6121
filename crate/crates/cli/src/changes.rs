use std::collections::BTreeSet;
use std::path::PathBuf;

use clap::Args;
use dynppe::analytics::{change_records, rank_changes, DEFAULT_MIN_DEGREE_DELTA};
use dynppe::export::{format_change_report, parse_embeddings};
use dynppe::{GraphState, NodeId};

use crate::input;
use crate::{CliError, StreamArgs};

#[derive(Debug, Args)]
pub struct ChangesArgs {
    /// Embedding TSV written by `embed`.
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Restrict the report to these nodes.
    #[arg(long)]
    pub subset: Option<PathBuf>,
    /// Event stream the embeddings came from; supplies degree changes.
    #[arg(long)]
    pub events: Option<PathBuf>,
    #[arg(long, value_name = "N", requires = "events")]
    pub snapshot_every: Option<usize>,
    /// Keep only nodes whose degree grew by more than this across a step.
    #[arg(long, default_value_t = DEFAULT_MIN_DEGREE_DELTA, allow_negative_numbers = true)]
    pub min_degree_delta: i64,
    /// Report file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &ChangesArgs) -> Result<(), CliError> {
    let raw = input::read(&args.embeddings)?;
    let text = std::str::from_utf8(&raw.bytes)
        .map_err(|e| CliError::Usage(format!("{}: not UTF-8: {e}", args.embeddings.display())))?;
    let table = parse_embeddings(text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", args.embeddings.display())))?;
    if table.snapshot_count() < 2 {
        return Err(CliError::Usage(format!(
            "{}: need at least 2 snapshots, found {}",
            args.embeddings.display(),
            table.snapshot_count()
        )));
    }

    let mut histories = table.histories();
    if let Some(path) = &args.subset {
        let keep: BTreeSet<NodeId> = input::load_subset(path)?.0.into_iter().collect();
        histories.retain(|n, _| keep.contains(n));
    }
    if let Some(events) = &args.events {
        let stream_args = StreamArgs {
            events: events.clone(),
            snapshot_every: args.snapshot_every,
        };
        let (stream, _) = input::load_stream(&stream_args)?;
        let mut g = GraphState::from_events(&stream.initial)?;
        let mut degrees = vec![degrees_of(&g, histories.keys())];
        for delta in &stream.deltas {
            g.apply_delta(delta)?;
            degrees.push(degrees_of(&g, histories.keys()));
        }
        for (i, (_, history)) in histories.iter_mut().enumerate() {
            for entry in history.iter_mut() {
                let at = degrees.get(entry.snapshot).ok_or_else(|| {
                    CliError::Usage(format!(
                        "embedding snapshot {} is beyond the {} snapshots of the stream",
                        entry.snapshot,
                        degrees.len()
                    ))
                })?;
                entry.degree = Some(at[i]);
            }
        }
    }

    let records = rank_changes(change_records(&histories)?, args.min_degree_delta);
    input::write_output(args.out.as_deref(), &format_change_report(&records))
}

fn degrees_of<'a>(g: &GraphState, nodes: impl Iterator<Item = &'a NodeId>) -> Vec<usize> {
    nodes.map(|&n| g.degree(n)).collect()
}
