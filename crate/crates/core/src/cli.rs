//! `mskel` command-line front end.
//!
//! Machine-readable output goes to `--output` (or standard output); warnings
//! and errors go to standard error. Every random choice is driven by `--seed`,
//! which defaults to [`DEFAULT_SEED`].

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::coreset::{pathological_experiment, run_experiment, EdgeGroup, ExperimentConfig, GraphSource, Policy};
use crate::decomposition::{block_decomposition, canonical_vertex_cover, BlockDecomposition};
use crate::graph::{gen_pathological, gen_perfect, gen_random_bipartite, parse_edge_list, write_edge_list, BipartiteGraph, Duplicates};
use crate::matching::maximum_matching;
use crate::rational::fmt_ratio;
use crate::skeleton::matching_skeleton;

pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(name = "mskel", version, about = "Matching-skeleton coresets for bipartite matching")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a generated graph as an edge list.
    Gen(GenArgs),
    /// Emit the block decomposition and canonical cover as JSON.
    Decompose(IoArgs),
    /// Emit the skeleton support as an edge list plus a JSON weight sidecar.
    Skeleton(SkeletonArgs),
    /// Emit the canonical vertex cover, checking it against the maximum matching.
    Cover(IoArgs),
    /// Run coreset trials on a graph file.
    Simulate(SimulateArgs),
    /// Run coreset trials with avoiding skeletons on the pathological graph.
    Pathological(PathologicalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Perfect,
    Random,
    Pathological,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyFlag {
    Canonical,
    Avoid,
    Baseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub family: Family,
    /// |P| (and |Q| for the perfect family).
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long)]
    pub prob: Option<f64>,
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Collapse repeated edges (with a warning) instead of rejecting the file.
    #[arg(long)]
    pub allow_duplicates: bool,
}

#[derive(Debug, Args)]
pub struct IoArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SkeletonArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Support edge list; the sidecar defaults to `<output>.json`.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = PolicyFlag::Canonical)]
    pub policy: PolicyFlag,
    /// P-range `START:END` of the avoided edge group (policy `avoid`).
    #[arg(long)]
    pub avoid_p: Option<String>,
    /// Q-range `START:END` of the avoided edge group (policy `avoid`).
    #[arg(long)]
    pub avoid_q: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PathologicalArgs {
    #[arg(long)]
    pub r: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Parses `argv` (including the program name), runs the command, and returns
/// the process exit status.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("mskel: {e:#}");
            1
        }
    }
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Gen(a) => gen(a),
        Command::Decompose(a) => {
            let g = read_graph(&a.input)?;
            let d = block_decomposition(&g);
            emit(a.output.as_deref(), &(serde_json::to_string_pretty(&decomposition_json(&d))? + "\n"))
        }
        Command::Skeleton(a) => skeleton(a),
        Command::Cover(a) => cover(a),
        Command::Simulate(a) => simulate(a),
        Command::Pathological(a) => {
            let report = pathological_experiment(a.r, a.k, a.reps, a.seed)?;
            let body = match a.format {
                Format::Csv => report.to_csv(),
                Format::Json => report.to_json() + "\n",
            };
            emit(a.output.as_deref(), &body)
        }
    }
}

fn need<T>(v: Option<T>, flag: &str, family: &str) -> anyhow::Result<T> {
    v.with_context(|| format!("--{flag} is required for family {family}"))
}

fn gen(a: GenArgs) -> anyhow::Result<()> {
    let g = match a.family {
        Family::Perfect => gen_perfect(need(a.p, "p", "perfect")?),
        Family::Random => gen_random_bipartite(
            need(a.p, "p", "random")?,
            need(a.q, "q", "random")?,
            need(a.prob, "prob", "random")?,
            a.seed,
        )?,
        Family::Pathological => gen_pathological(need(a.r, "r", "pathological")?, need(a.k, "k", "pathological")?)?,
    };
    emit(a.output.as_deref(), &write_edge_list(&g))
}

fn skeleton(a: SkeletonArgs) -> anyhow::Result<()> {
    let g = read_graph(&a.input)?;
    let h = matching_skeleton(&g)?;
    let verdict = h.verify(&g);
    if !verdict.is_ok() {
        bail!("skeleton invariant violated: {verdict}");
    }
    let support = h.support_graph();
    let sidecar = json!({
        "alphas": h.decomposition.blocks.iter().map(|b| fmt_ratio(&b.alpha)).collect::<Vec<_>>(),
        "blocks": decomposition_json(&h.decomposition)["blocks"],
        "weights": h.weights.iter().map(|(e, w)| json!({"p": e.p, "q": e.q, "w": fmt_ratio(&w)})).collect::<Vec<_>>(),
    });
    let sidecar_path = a.sidecar.clone().unwrap_or_else(|| {
        let mut s = a.output.clone().into_os_string();
        s.push(".json");
        PathBuf::from(s)
    });
    emit(Some(&a.output), &write_edge_list(&support))?;
    emit(Some(&sidecar_path), &(serde_json::to_string_pretty(&sidecar)? + "\n"))
}

fn cover(a: IoArgs) -> anyhow::Result<()> {
    let g = read_graph(&a.input)?;
    let cover = canonical_vertex_cover(&block_decomposition(&g));
    let mm = maximum_matching(&g).len();
    if cover.len() != mm || !cover.to_vertex_cover().covers(&g) {
        bail!("canonical cover of size {} is not a minimum vertex cover (matching size {mm})", cover.len());
    }
    let body = json!({"p": cover.p, "q": cover.q, "size": cover.len(), "mm": mm});
    emit(a.output.as_deref(), &(serde_json::to_string_pretty(&body)? + "\n"))
}

fn parse_range(s: &str, flag: &str) -> anyhow::Result<std::ops::Range<usize>> {
    let (a, b) = s.split_once(':').with_context(|| format!("--{flag} expects START:END, got `{s}`"))?;
    let (a, b): (usize, usize) = (a.trim().parse()?, b.trim().parse()?);
    if a > b {
        bail!("--{flag}: empty or reversed range {s}");
    }
    Ok(a..b)
}

fn simulate(a: SimulateArgs) -> anyhow::Result<()> {
    let g = read_graph(&a.input)?;
    let policy = match a.policy {
        PolicyFlag::Canonical => Policy::Canonical,
        PolicyFlag::Baseline => Policy::Baseline,
        PolicyFlag::Avoid => {
            let p = parse_range(a.avoid_p.as_deref().context("--policy avoid needs --avoid-p")?, "avoid-p")?;
            let q = parse_range(a.avoid_q.as_deref().context("--policy avoid needs --avoid-q")?, "avoid-q")?;
            Policy::Avoid(EdgeGroup { p, q })
        }
    };
    if a.k == 0 || a.reps == 0 {
        bail!("--k and --reps must be at least 1");
    }
    let config = ExperimentConfig { source: GraphSource::Given(Arc::new(g)), k: a.k, repetitions: a.reps, seed: a.seed, policy };
    let report = run_experiment(&config)?;
    let body = match a.format {
        Format::Csv => report.to_csv(),
        Format::Json => report.to_json() + "\n",
    };
    emit(a.output.as_deref(), &body)
}

/// JSON view of a decomposition with its canonical cover.
pub fn decomposition_json(d: &BlockDecomposition) -> serde_json::Value {
    let cover = canonical_vertex_cover(d);
    json!({
        "blocks": d.blocks.iter().map(|b| json!({"alpha": fmt_ratio(&b.alpha), "p": b.p_set, "q": b.q_set})).collect::<Vec<_>>(),
        "leftover_q": d.leftover_q,
        "canonical_cover": {"p": cover.p, "q": cover.q},
    })
}

fn read_graph(a: &InputArgs) -> anyhow::Result<BipartiteGraph> {
    let text = fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let policy = if a.allow_duplicates { Duplicates::Collapse } else { Duplicates::Reject };
    let parsed = parse_edge_list(&text, policy).with_context(|| format!("parsing {}", a.input.display()))?;
    if parsed.duplicates > 0 {
        eprintln!("mskel: warning: collapsed {} duplicate edges in {}", parsed.duplicates, a.input.display());
    }
    Ok(parsed.graph)
}

fn emit(path: Option<&Path>, body: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, body).with_context(|| format!("writing {}", p.display())),
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes())?;
            Ok(out.flush()?)
        }
    }
}
