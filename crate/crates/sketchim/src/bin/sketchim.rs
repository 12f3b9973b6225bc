//! Command-line frontend: seed selection, oracle evaluation, sampling
//! diagnostics, and benchmark sweeps.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use sketchim::graph::{load_graph, CsrGraph, ParseOptions, WeightModel};
use sketchim::hashing::{bias_report, EdgeHashCache, SimulationSet};
use sketchim::oracle::{oracle_influence, write_score_csv, OracleConfig};
use sketchim::seeder::{select_seeds, ErrorPolicy, SeedStep};
use sketchim::{Error, ExecMode};

const FORMAT_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "sketchim", version, about = "Sketch-based influence maximization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select a seed set with the sketch-based greedy kernel.
    Select(SelectArgs),
    /// Score a seed set with the independent Monte-Carlo oracle.
    Evaluate(EvaluateArgs),
    /// Export the uniformity/bias diagnostics of the fused sampler.
    BiasStats(BiasArgs),
    /// Run a sweep of select+evaluate configurations from a file.
    Bench(BenchArgs),
}

#[derive(Args, Clone)]
struct GraphArgs {
    /// Edge-list file ('#' comments, "u v" or "u v w" lines).
    #[arg(long)]
    graph: PathBuf,
    /// Treat the input as undirected (emit both edge directions).
    #[arg(long)]
    undirected: bool,
    /// Weight model: const:<w>, wc, or raw.
    #[arg(long, short = 'w', default_value = "const:0.01")]
    weights: String,
}

#[derive(Args)]
struct SelectArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Number of seeds.
    #[arg(long, short)]
    k: usize,
    /// Simulations / registers per vertex.
    #[arg(long, short, default_value_t = 256)]
    j: usize,
    /// Local estimation-error threshold (inf disables).
    #[arg(long, default_value_t = 0.3)]
    eps_l: f64,
    /// Global estimation-error threshold (inf disables).
    #[arg(long, default_value_t = 0.01)]
    eps_g: f64,
    /// Diffusion early-exit live ratio.
    #[arg(long, default_value_t = 0.02)]
    eps_c: f64,
    /// Master seed for the per-simulation salts.
    #[arg(long, env = "SKETCHIM_SEED", default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, env = "SKETCHIM_THREADS", default_value_t = 0)]
    threads: usize,
    /// Allow non-deterministic relaxed diffusion scheduling.
    #[arg(long)]
    relaxed: bool,
    /// Log per-iteration diffusion progress to stderr.
    #[arg(long)]
    trace: bool,
    /// Write the result JSON here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Seed file: whitespace-separated original vertex IDs, or a JSON
    /// result produced by `select`.
    #[arg(long)]
    seeds: PathBuf,
    /// Monte-Carlo rounds.
    #[arg(long, short, default_value_t = 10_000)]
    rounds: u32,
    /// Oracle RNG seed.
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
    #[arg(long, env = "SKETCHIM_THREADS", default_value_t = 0)]
    threads: usize,
    /// Write the score CSV here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BiasArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, short, default_value_t = 256)]
    j: usize,
    /// Number of (edge, simulation) draws.
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, env = "SKETCHIM_SEED", default_value_t = 0)]
    seed: u64,
    /// Write the bias CSV here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Sweep description file (JSON array of run configs).
    #[arg(long)]
    sweep: PathBuf,
    #[arg(long, env = "SKETCHIM_THREADS", default_value_t = 0)]
    threads: usize,
    /// Write the sweep CSV here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

/// One sweep entry of the bench file.
#[derive(Debug, Serialize, Deserialize)]
struct BenchRun {
    graph: PathBuf,
    #[serde(default)]
    undirected: bool,
    weights: String,
    k: usize,
    j: usize,
    #[serde(default = "default_eps_l")]
    eps_l: f64,
    #[serde(default = "default_eps_g")]
    eps_g: f64,
    #[serde(default = "default_eps_c")]
    eps_c: f64,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_rounds")]
    oracle_rounds: u32,
}

fn default_eps_l() -> f64 {
    0.3
}
fn default_eps_g() -> f64 {
    0.01
}
fn default_eps_c() -> f64 {
    0.02
}
fn default_rounds() -> u32 {
    10_000
}

/// Echo of the run configuration inside the result JSON.
#[derive(Serialize)]
struct ConfigEcho<'a> {
    graph: &'a Path,
    undirected: bool,
    weights: &'a str,
    k: usize,
    j: usize,
    eps_l: f64,
    eps_g: f64,
    eps_c: f64,
    master_seed: u64,
    mode: &'a str,
    n: usize,
    m: usize,
}

#[derive(Serialize)]
struct SelectOutput<'a> {
    format_version: u32,
    config: ConfigEcho<'a>,
    /// Seeds as original input-file IDs.
    seeds: Vec<u64>,
    steps: &'a [SeedStep],
    sigma_final: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Select(args) => cmd_select(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::BiasStats(args) => cmd_bias_stats(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(match err {
                Error::Parse { .. } => 4,
                Error::Io(_) => 3,
                Error::Validation(_) => 2,
            })
        }
    }
}

fn init_threads(threads: usize) {
    if threads > 0 {
        // ignore failure when a pool already exists (tests, repeated init)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
}

fn open_graph(args: &GraphArgs) -> Result<CsrGraph, Error> {
    let model: WeightModel = args.weights.parse()?;
    let file = File::open(&args.graph)?;
    load_graph(
        BufReader::new(file),
        &ParseOptions { directed: !args.undirected, ..Default::default() },
        model,
    )
}

fn write_output(path: &Option<PathBuf>, data: &[u8]) -> Result<(), Error> {
    match path {
        Some(p) => {
            let mut f = File::create(p)?;
            f.write_all(data)?;
        }
        None => std::io::stdout().write_all(data)?,
    }
    Ok(())
}

fn cmd_select(args: SelectArgs) -> Result<(), Error> {
    init_threads(args.threads);
    let graph = open_graph(&args.graph)?;
    let hashes = EdgeHashCache::build(&graph);
    let sims = SimulationSet::new(args.j, args.seed)?;
    let policy = ErrorPolicy { eps_l: args.eps_l, eps_g: args.eps_g, eps_c: args.eps_c };
    let mode = if args.relaxed { ExecMode::Relaxed } else { ExecMode::Strict };
    let started = Instant::now();
    let result = select_seeds(&graph, &hashes, args.k, &sims, &policy, mode)?;
    if args.trace {
        eprintln!(
            "selected {} seeds in {:.3}s ({} rebuilds)",
            result.seeds.len(),
            started.elapsed().as_secs_f64(),
            result.rebuild_count()
        );
    }
    eprintln!("{:>4} {:>8} {:>12} {:>12} {:>12} {:>10} {:>10} {:>8}", "k", "vertex", "estimate", "delta", "sigma", "err_l", "err_g", "rebuilt");
    for (i, step) in result.steps.iter().enumerate() {
        eprintln!(
            "{:>4} {:>8} {:>12.2} {:>12.2} {:>12.2} {:>10.4} {:>10.4} {:>8}",
            i + 1,
            graph.original_ids[step.vertex as usize],
            step.estimate,
            step.delta,
            step.sigma,
            step.err_l,
            step.err_g,
            step.rebuilt
        );
    }
    let output = SelectOutput {
        format_version: FORMAT_VERSION,
        config: ConfigEcho {
            graph: &args.graph.graph,
            undirected: args.graph.undirected,
            weights: &args.graph.weights,
            k: args.k,
            j: args.j,
            eps_l: args.eps_l,
            eps_g: args.eps_g,
            eps_c: args.eps_c,
            master_seed: args.seed,
            mode: if args.relaxed { "relaxed" } else { "strict" },
            n: graph.n,
            m: graph.m,
        },
        seeds: result
            .seeds
            .iter()
            .map(|&v| graph.original_ids[v as usize])
            .collect(),
        steps: &result.steps,
        sigma_final: result.sigma_final,
    };
    let mut json = serde_json::to_vec_pretty(&output).expect("result serialization");
    json.push(b'\n');
    write_output(&args.output, &json)
}

fn read_seed_file(path: &Path, graph: &CsrGraph) -> Result<Vec<u32>, Error> {
    let text = std::fs::read_to_string(path)?;
    // accept the JSON emitted by `select` as well as plain ID lists; a bare
    // number parses as JSON too, so only objects take the JSON path
    let originals: Vec<u64> = if let Ok(value @ serde_json::Value::Object(_)) =
        serde_json::from_str::<serde_json::Value>(&text)
    {
        value
            .get("seeds")
            .and_then(|s| s.as_array())
            .ok_or_else(|| Error::validation("seed JSON lacks a seeds array"))?
            .iter()
            .map(|v| {
                v.as_u64().ok_or_else(|| Error::validation("non-integer seed in JSON"))
            })
            .collect::<Result<_, _>>()?
    } else {
        text.split_whitespace()
            .map(|tok| {
                tok.parse::<u64>()
                    .map_err(|_| Error::validation(format!("invalid seed ID {tok:?}")))
            })
            .collect::<Result<_, _>>()?
    };
    let mut index = std::collections::HashMap::new();
    for (i, &orig) in graph.original_ids.iter().enumerate() {
        index.insert(orig, i as u32);
    }
    originals
        .iter()
        .map(|orig| {
            index
                .get(orig)
                .copied()
                .ok_or_else(|| Error::validation(format!("unknown vertex ID {orig}")))
        })
        .collect()
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), Error> {
    init_threads(args.threads);
    let graph = open_graph(&args.graph)?;
    let seeds = read_seed_file(&args.seeds, &graph)?;
    let config = OracleConfig { rounds: args.rounds, rng_seed: args.rng_seed };
    let score = oracle_influence(&graph, &seeds, &config)?;
    eprintln!("influence {:.2} +/- {:.3} over {} rounds", score.mean, score.stderr, args.rounds);
    let mut csv = Vec::new();
    write_score_csv(&mut csv, seeds.len(), &score, args.rounds)?;
    write_output(&args.output, &csv)
}

fn cmd_bias_stats(args: BiasArgs) -> Result<(), Error> {
    let graph = open_graph(&args.graph)?;
    let hashes = EdgeHashCache::build(&graph);
    let sims = SimulationSet::new(args.j, args.seed)?;
    let report = bias_report(&graph, &hashes, &sims, args.samples)?;
    eprintln!(
        "{} draws, max CDF deviation {:.5}",
        report.draws, report.max_cdf_deviation
    );
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    write_output(&args.output, &csv)
}

fn cmd_bench(args: BenchArgs) -> Result<(), Error> {
    init_threads(args.threads);
    let file = File::open(&args.sweep)?;
    let runs: Vec<BenchRun> = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| Error::validation(format!("invalid sweep file: {e}")))?;
    let mut csv = Vec::new();
    writeln!(
        csv,
        "format_version,graph,weights,k,j,eps_l,eps_g,eps_c,seed,wall_time_s,sigma_final,rebuilds,oracle_mean,oracle_stderr,peak_rss_kb"
    )?;
    for run in &runs {
        let graph_args = GraphArgs {
            graph: run.graph.clone(),
            undirected: run.undirected,
            weights: run.weights.clone(),
        };
        let graph = open_graph(&graph_args)?;
        let hashes = EdgeHashCache::build(&graph);
        let sims = SimulationSet::new(run.j, run.seed)?;
        let policy = ErrorPolicy { eps_l: run.eps_l, eps_g: run.eps_g, eps_c: run.eps_c };
        let started = Instant::now();
        let result = select_seeds(&graph, &hashes, run.k, &sims, &policy, ExecMode::Strict)?;
        let wall = started.elapsed().as_secs_f64();
        let score = oracle_influence(
            &graph,
            &result.seeds,
            &OracleConfig { rounds: run.oracle_rounds, rng_seed: run.seed },
        )?;
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{:.6},{},{},{},{},{}",
            FORMAT_VERSION,
            run.graph.display(),
            run.weights,
            run.k,
            run.j,
            run.eps_l,
            run.eps_g,
            run.eps_c,
            run.seed,
            wall,
            result.sigma_final,
            result.rebuild_count(),
            score.mean,
            score.stderr,
            peak_rss_kb().map_or(String::new(), |kb| kb.to_string()),
        )?;
    }
    write_output(&args.output, &csv)
}

/// Peak resident set size of this process, when the kernel exposes it.
fn peak_rss_kb() -> Option<u64> {
    let file = File::open("/proc/self/status").ok()?;
    for line in BufReader::new(file).lines() {
        let line = line.ok()?;
        if let Some(rest) = line.strip_prefix("VmHWM:") {
            return rest.trim().trim_end_matches(" kB").trim().parse().ok();
        }
    }
    None
}
