use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, ValueEnum};
use dynppe::commute::{commute_run, CommuteConfig, InitMode};
use dynppe::export::format_embeddings;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::input::{self, SnapshotDigest};
use crate::{CliError, ConfigArgs, Method, StreamArgs};

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub stream: StreamArgs,
    /// Tracked nodes, one id per line.
    #[arg(long)]
    pub subset: PathBuf,
    /// Embedding TSV; the manifest goes to `<out>.manifest.json`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::Dynppe)]
    pub method: Method,
    /// Initial vector distribution for `--method commute`.
    #[arg(long, value_enum, default_value_t = CommuteInit::Gaussian)]
    pub commute_init: CommuteInit,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CommuteInit {
    Gaussian,
    Uniform,
}

#[derive(Debug, Serialize)]
struct ConfigEcho {
    alpha: f64,
    epsilon: f64,
    beta: f64,
    dim: usize,
    seed: u32,
    seed_index: u32,
    seed_sign: u32,
    parallelism: usize,
    snapshot_every: Option<usize>,
    commute_init: Option<&'static str>,
}

#[derive(Debug, Serialize)]
struct InputDigest {
    events_path: String,
    events_sha256: String,
    event_count: usize,
    snapshot_count: usize,
    subset_path: String,
    subset_sha256: String,
    subset_size: usize,
    snapshots: Vec<SnapshotDigest>,
}

#[derive(Debug, Serialize)]
struct OutputDigest {
    path: String,
    sha256: String,
    rows: usize,
}

#[derive(Debug, Serialize)]
struct RunManifest {
    tool: &'static str,
    version: &'static str,
    method: &'static str,
    config: ConfigEcho,
    input: InputDigest,
    output: OutputDigest,
    /// Snapshot at which each tracked node got its first edge.
    activated_at: BTreeMap<u32, Option<usize>>,
    wall_time_seconds: f64,
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

pub fn run(args: &EmbedArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let cfg = args.config.run_config()?;
    let (stream, events) = input::load_stream(&args.stream)?;
    let (subset, subset_input) = input::load_subset(&args.subset)?;
    let (snapshots, _) = input::replay(&stream)?;

    let (histories, activated_at) = match args.method {
        Method::Dynppe => {
            let state = dynppe::run(&stream, subset.iter().copied(), cfg.clone())?;
            let activated = state
                .tracked()
                .iter()
                .map(|t| (t.node.0, t.activated_at))
                .collect();
            (state.into_histories(), activated)
        }
        Method::Commute => {
            let mode = match args.commute_init {
                CommuteInit::Gaussian => InitMode::Gaussian,
                CommuteInit::Uniform => InitMode::Uniform,
            };
            let commute = CommuteConfig::new(args.config.dim, u64::from(args.config.seed))?
                .with_init_mode(mode);
            let histories = commute_run(&stream, subset.iter().copied(), commute)?;
            let activated = histories.keys().map(|n| (n.0, Some(0))).collect();
            (histories, activated)
        }
    };

    let text = format_embeddings(&histories, args.config.dim, args.method.tag());
    std::fs::write(&args.out, &text).map_err(|e| CliError::io(&args.out, e))?;

    let manifest = RunManifest {
        tool: "dynppe",
        version: env!("CARGO_PKG_VERSION"),
        method: args.method.tag(),
        config: ConfigEcho {
            alpha: cfg.alpha,
            epsilon: cfg.epsilon,
            beta: cfg.beta,
            dim: cfg.dim(),
            seed: args.config.seed,
            seed_index: cfg.hash.seed_index(),
            seed_sign: cfg.hash.seed_sign(),
            parallelism: cfg.parallelism,
            snapshot_every: args.stream.snapshot_every,
            commute_init: (args.method == Method::Commute).then_some(match args.commute_init {
                CommuteInit::Gaussian => "gaussian",
                CommuteInit::Uniform => "uniform",
            }),
        },
        input: InputDigest {
            events_path: args.stream.events.display().to_string(),
            events_sha256: events.sha256,
            event_count: stream.event_count(),
            snapshot_count: stream.snapshot_count(),
            subset_path: args.subset.display().to_string(),
            subset_sha256: subset_input.sha256,
            subset_size: histories.len(),
            snapshots,
        },
        output: OutputDigest {
            path: args.out.display().to_string(),
            sha256: input::hex(&Sha256::digest(text.as_bytes())),
            rows: histories.values().map(Vec::len).sum(),
        },
        activated_at,
        wall_time_seconds: started.elapsed().as_secs_f64(),
    };
    let path = manifest_path(&args.out);
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::Usage(format!("manifest: {e}")))?;
    std::fs::write(&path, json + "\n").map_err(|e| CliError::io(&path, e))
}
