use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use dynppe::oracle::{self, DEFAULT_ALL_PAIRS_CAP, DEFAULT_TOL};
use dynppe::{GraphState, NodeId, PipelineState, PprState, PushParams, RunConfig};

use crate::input;
use crate::{CliError, ConfigArgs, StreamArgs};

const INVARIANT_LIMIT: f64 = 1e-8;
const SYMMETRY_LIMIT: f64 = 1e-10;
const MASS_SLACK: f64 = 10.0 * DEFAULT_TOL;

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub stream: StreamArgs,
    /// Sources to check; defaults to every node in the stream.
    #[arg(long)]
    pub subset: Option<PathBuf>,
    /// Report file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Largest node-id range the oracle will solve.
    #[arg(long, default_value_t = DEFAULT_ALL_PAIRS_CAP)]
    pub oracle_cap: usize,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, hide = true)]
    pub inject_residual_fault: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub snapshot: usize,
    pub check: &'static str,
    pub measured: f64,
    pub threshold: f64,
}

impl CheckRow {
    pub fn passed(&self) -> bool {
        self.measured <= self.threshold
    }
}

pub fn run(args: &CheckArgs) -> Result<(), CliError> {
    let cfg = args.config.run_config()?;
    let (stream, _) = input::load_stream(&args.stream)?;
    let (_, final_graph) = input::replay(&stream)?;
    if final_graph.id_bound() > args.oracle_cap {
        return Err(CliError::Cap(format!(
            "final graph spans {} node ids, oracle cap is {}",
            final_graph.id_bound(),
            args.oracle_cap
        )));
    }
    let sources: Vec<NodeId> = match &args.subset {
        Some(path) => input::load_subset(path)?.0,
        None => {
            let mut nodes: Vec<NodeId> = stream.events().flat_map(|e| [e.u, e.v]).collect();
            nodes.sort_unstable();
            nodes.dedup();
            nodes
        }
    };
    if sources.is_empty() {
        return Err(CliError::Usage("stream has no events".into()));
    }

    let g0 = GraphState::from_events(&stream.initial)?;
    let mut state = PipelineState::initialize(g0, sources, cfg.clone())?;
    let last = stream.deltas.len();
    let mut rows = Vec::new();
    for t in 0..=last {
        if t > 0 {
            state.process_snapshot(&stream.deltas[t - 1])?;
        }
        if t == last && args.inject_residual_fault {
            inject_fault(&mut state)?;
        }
        rows.extend(check_snapshot(&state, &cfg, args.oracle_cap)?);
    }

    let failed = rows.iter().filter(|r| !r.passed()).count();
    input::write_output(args.out.as_deref(), &format_report(&rows))?;
    if failed > 0 {
        return Err(CliError::ChecksFailed {
            failed,
            total: rows.len(),
        });
    }
    Ok(())
}

fn inject_fault(state: &mut PipelineState) -> Result<(), CliError> {
    let eps_t = state.reports().last().and_then(|r| r.epsilon_t);
    let source = state
        .tracked()
        .iter()
        .find(|t| t.ppr.is_initialized())
        .map(|t| t.node);
    let (Some(eps_t), Some(s)) = (eps_t, source) else {
        return Err(CliError::Usage("no initialized source to corrupt".into()));
    };
    let amount = 10.0 * eps_t * state.graph().degree(s) as f64;
    state.inject_residual_fault(s, s, amount)?;
    Ok(())
}

fn worst(rows: &mut Vec<CheckRow>, snapshot: usize, check: &'static str, threshold: f64, values: impl IntoIterator<Item = f64>) {
    let measured = values.into_iter().fold(0.0, f64::max);
    rows.push(CheckRow {
        snapshot,
        check,
        measured,
        threshold,
    });
}

/// Every oracle-backed bound at the pipeline's current snapshot, each as the
/// worst value over the initialized sources.
pub fn check_snapshot(
    state: &PipelineState,
    cfg: &RunConfig,
    cap: usize,
) -> Result<Vec<CheckRow>, CliError> {
    let g = state.graph();
    let snapshot = g.snapshot_index();
    let Some(eps_t) = state.reports().last().and_then(|r| r.epsilon_t) else {
        return Ok(Vec::new());
    };
    let params = PushParams::new(cfg.alpha, eps_t)?.with_beta(cfg.beta)?;

    let mut l1 = Vec::new();
    let mut entry = Vec::new();
    let mut invariant = Vec::new();
    let mut gap = Vec::new();
    let mut work = Vec::new();
    for t in state.tracked().iter().filter(|t| t.ppr.is_initialized()) {
        let (p, r) = (t.ppr.estimate(), t.ppr.residual());
        let pi = oracle::exact_ppr(g, t.node, cfg.alpha, DEFAULT_TOL)?;
        l1.push(pi.l1_error(p));
        entry.push(pi.max_degree_scaled_error(p, g));
        invariant.push(oracle::check_invariant(
            g, t.node, p, r, cfg.alpha, DEFAULT_TOL, cap,
        )?);

        let mut scratch = PprState::new(t.node);
        let stats = scratch.forward_push(g, &params)?;
        let dense = p.to_dense(g.id_bound());
        let fresh = scratch.estimate().to_dense(g.id_bound());
        gap.push(dense.iter().zip(&fresh).map(|(a, b)| (a - b).abs()).sum());
        let bound = (1.0 - scratch.residual_l1()) / (cfg.alpha * eps_t);
        work.push(stats.work as f64 / bound);
    }
    let mut rows = Vec::new();
    worst(&mut rows, snapshot, "l1_error", cfg.epsilon, l1);
    worst(&mut rows, snapshot, "entry_error", eps_t, entry);
    worst(&mut rows, snapshot, "invariant", INVARIANT_LIMIT, invariant);
    worst(&mut rows, snapshot, "scratch_gap", 2.0 * cfg.epsilon, gap);
    worst(&mut rows, snapshot, "push_work_ratio", 1.0, work);

    let symmetry = oracle::check_symmetry(g, cfg.alpha, DEFAULT_TOL, cap)?;
    worst(&mut rows, snapshot, "symmetry", SYMMETRY_LIMIT, [symmetry]);
    let pis = oracle::all_pairs(g, cfg.alpha, DEFAULT_TOL, cap)?;
    let mass = g.nodes().map(|u| {
        pis.iter().map(|(_, pi)| pi[u.index()]).sum::<f64>() / g.degree(u) as f64
    });
    worst(&mut rows, snapshot, "mass_bound", 1.0 + MASS_SLACK, mass);
    Ok(rows)
}

pub const REPORT_HEADER: &str = "snapshot\tcheck\tmeasured\tthreshold\tstatus";

pub fn format_report(rows: &[CheckRow]) -> String {
    let mut out = format!("{REPORT_HEADER}\n");
    for r in rows {
        let status = if r.passed() { "PASS" } else { "FAIL" };
        let _ = writeln!(
            out,
            "{}\t{}\t{:.6e}\t{:.6e}\t{status}",
            r.snapshot, r.check, r.measured, r.threshold
        );
    }
    let failed = rows.iter().filter(|r| !r.passed()).count();
    let _ = writeln!(out, "# {} checks, {failed} failed", rows.len());
    out
}
