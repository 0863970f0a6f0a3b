//! `simproj`: run experiments, generate graphs and stream edges through the
//! simproj service. Without `--server` an embedded server is started on a
//! loopback port for the duration of the command.

use std::fs::File;
use std::io::{self, BufWriter, IsTerminal, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use simproj_client::{Client, CreateSession, QueryParams, SynthRequest};
use simproj_core::experiment::{emit_results, AggBudget, EdgeBudget, ExperimentConfig, Method, OutputFormat, TopK};
use simproj_core::io::{load_stream, write_edge_file, AffiliationParams, EdgeStreamFile, SynthParams};
use simproj_core::{SamplerMode, Side};
use simproj_server::ServerConfig;
use tokio::net::TcpListener;
use tracing::Level;

#[derive(Parser)]
#[command(name = "simproj", version, about = "Streaming common-neighbor similarity estimation")]
struct Cli {
    /// Base URL of a running service. Defaults to an embedded server.
    #[arg(long, global = true, env = "SIMPROJ_SERVER")]
    server: Option<String>,

    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP service in the foreground.
    Serve(ServeArgs),
    /// Run an experiment against the exact projection and report metrics.
    Run(RunArgs),
    /// Generate a synthetic bipartite edge list.
    Synth(SynthArgs),
    /// Print size and degree statistics of an edge list.
    Stats {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Feed an edge list through a live session and print the top estimates.
    Stream(StreamArgs),
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:7878")]
    bind: SocketAddr,
    #[arg(long, default_value_t = 64)]
    max_sessions: usize,
    #[arg(long, default_value_t = 1)]
    max_experiments: usize,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// One or more of simadapt, simfixed, simunif, simple, cnhash.
    #[arg(long, value_delimiter = ',', default_value = "simadapt")]
    mode: Vec<Method>,
    /// Edge reservoir size as a fraction of the stream.
    #[arg(long = "fm", conflicts_with = "m")]
    f_m: Option<f64>,
    /// Edge reservoir size in edges.
    #[arg(long)]
    m: Option<usize>,
    /// Aggregator size as a fraction of the exact pair count.
    #[arg(long = "fn", conflicts_with_all = ["n", "exact_aggregation"])]
    f_n: Option<f64>,
    /// Aggregator size in keys.
    #[arg(long, conflicts_with = "exact_aggregation")]
    n: Option<usize>,
    /// Aggregate exactly instead of sampling.
    #[arg(long)]
    exact_aggregation: bool,
    /// Minimum update count for an estimate to be ranked.
    #[arg(long, default_value_t = 10)]
    filter: u64,
    /// Ranks to evaluate, e.g. `50,100,max`.
    #[arg(long, value_delimiter = ',', default_value = "100,max")]
    topk: Vec<TopK>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    reps: u32,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
    /// Abort the oracle beyond this many similar pairs.
    #[arg(long)]
    oracle_budget: Option<usize>,
    /// Also evaluate every this many edges.
    #[arg(long)]
    snapshot_every: Option<u64>,
    #[arg(long, default_value = "u", value_parser = parse_side)]
    side: Side,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Generator {
    Bipartite,
    Affiliation,
    GithubLike,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum, default_value = "bipartite")]
    generator: Generator,
    #[arg(long, default_value_t = 1000)]
    n_u: u64,
    #[arg(long, default_value_t = 1000)]
    n_v: u64,
    #[arg(long, default_value_t = 5000)]
    edges: u64,
    /// Attachment exponent for `bipartite`; rank-size exponent of both
    /// sides for `affiliation`.
    #[arg(long, default_value_t = 1.0)]
    exponent: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct StreamArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value = "adaptive")]
    mode: SamplerMode,
    #[arg(long)]
    m: usize,
    /// Aggregator size; exact aggregation when absent.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    batch: usize,
    #[arg(long, default_value_t = 0)]
    filter: u64,
    /// Number of pairs to print.
    #[arg(long, default_value_t = 20)]
    topk: usize,
    #[arg(long, value_parser = parse_side)]
    side: Option<Side>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
}

fn parse_side(s: &str) -> Result<Side, String> {
    match s.to_ascii_lowercase().as_str() {
        "u" => Ok(Side::U),
        "v" => Ok(Side::V),
        _ => Err(format!("side must be u or v, got {s:?}")),
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let level = if cli.verbose || matches!(cli.command, Command::Serve(_)) { Level::INFO } else { Level::WARN };
    tracing_subscriber::fmt()
        .with_writer(io::stderr)
        .with_ansi(io::stderr().is_terminal())
        .with_max_level(level)
        .with_target(false)
        .init();
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(dispatch(cli))
}

async fn dispatch(cli: Cli) -> Result<()> {
    if let Command::Serve(args) = &cli.command {
        return serve(args).await;
    }
    let client = connect(cli.server.as_deref()).await?;
    match cli.command {
        Command::Serve(_) => unreachable!(),
        Command::Run(args) => run(&client, args).await,
        Command::Synth(args) => synth(&client, args).await,
        Command::Stats { dataset } => {
            let stats = client.inspect(&server_path(&dataset)?).await?;
            println!("{}", serde_json::to_string_pretty(&stats)?);
            Ok(())
        }
        Command::Stream(args) => stream(&client, args).await,
    }
}

async fn serve(args: &ServeArgs) -> Result<()> {
    let listener = TcpListener::bind(args.bind).await.with_context(|| format!("binding {}", args.bind))?;
    // Printed on stdout so scripts binding port 0 can find the address.
    println!("listening on {}", listener.local_addr()?);
    io::stdout().flush()?;
    let config = ServerConfig {
        max_sessions: args.max_sessions,
        max_experiments: args.max_experiments,
        ..ServerConfig::default()
    };
    simproj_server::serve(listener, config).await?;
    Ok(())
}

async fn connect(server: Option<&str>) -> Result<Client> {
    let base = match server {
        Some(url) => url.to_string(),
        None => {
            let addr = simproj_server::spawn_local(ServerConfig::default()).await?;
            format!("http://{addr}")
        }
    };
    let client = Client::new(base)?;
    client.health().await.with_context(|| format!("no service at {}", client.base_url()))?;
    Ok(client)
}

/// Paths are resolved by the server; send absolute ones when the file is
/// visible here so that relative paths mean the caller's directory.
fn server_path(path: &Path) -> Result<String> {
    let resolved = path.canonicalize().unwrap_or_else(|_| path.to_path_buf());
    resolved.to_str().map(str::to_string).context("dataset path is not valid UTF-8")
}

fn output(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

async fn run(client: &Client, args: RunArgs) -> Result<()> {
    let dataset = PathBuf::from(server_path(&args.dataset)?);
    let mut records = Vec::new();
    for &mode in &args.mode {
        let mut cfg = ExperimentConfig::new(&dataset, mode);
        cfg.edge_budget = match (args.f_m, args.m) {
            (_, Some(m)) => EdgeBudget::Absolute(m),
            (Some(f), None) => EdgeBudget::Fraction(f),
            (None, None) => cfg.edge_budget,
        };
        cfg.agg_budget = match (args.exact_aggregation, args.f_n, args.n) {
            (true, ..) => AggBudget::Unbounded,
            (_, _, Some(n)) => AggBudget::Absolute(n),
            (_, Some(f), None) => AggBudget::Fraction(f),
            _ => cfg.agg_budget,
        };
        cfg.filter_threshold = args.filter;
        cfg.top_k = args.topk.clone();
        cfg.seed = args.seed;
        cfg.repetitions = args.reps;
        cfg.oracle_budget = args.oracle_budget;
        cfg.snapshot_every = args.snapshot_every;
        cfg.side = args.side;
        cfg.validate()?;
        tracing::info!(mode = %mode, reps = args.reps, "running");
        let batch = client.run_experiment(&cfg).await.with_context(|| format!("{mode} run failed"))?;
        for r in &batch {
            if !r.metrics_available {
                tracing::warn!(seed = r.seed, "metrics unavailable: oracle budget exceeded");
            }
        }
        records.extend(batch);
    }
    if records.is_empty() {
        bail!("no runs requested");
    }
    let mut out = output(args.out.as_deref())?;
    emit_results(&records, args.format, &mut out)?;
    out.flush()?;
    Ok(())
}

async fn synth(client: &Client, args: SynthArgs) -> Result<()> {
    let req = match args.generator {
        Generator::Bipartite => SynthRequest::Bipartite(SynthParams {
            n_u: args.n_u,
            n_v: args.n_v,
            edges: args.edges,
            degree_exponent: args.exponent,
            seed: args.seed,
        }),
        Generator::Affiliation => {
            let base = AffiliationParams::github_like(args.seed);
            let scale = args.edges as f64 / base.edges as f64;
            SynthRequest::Affiliation(AffiliationParams {
                n_u: args.n_u,
                n_v: args.n_v,
                edges: args.edges,
                u_exponent: args.exponent,
                v_exponent: args.exponent,
                max_community_v: (base.max_community_v * scale.sqrt()).max(2.0),
                max_community_u: (base.max_community_u * scale.sqrt()).max(2.0),
                ..base
            })
        }
        Generator::GithubLike => SynthRequest::GithubLike { seed: args.seed },
    };
    let resp = client.synth(&req).await?;
    write_edge_file(&args.out, &resp.edges, resp.n_u, resp.n_v)
        .with_context(|| format!("writing {}", args.out.display()))?;
    eprintln!("{}", serde_json::to_string(&resp.stats)?);
    Ok(())
}

async fn stream(client: &Client, args: StreamArgs) -> Result<()> {
    if args.batch == 0 {
        bail!("--batch must be positive");
    }
    let loaded = load_stream(&EdgeStreamFile::new(&args.dataset))
        .with_context(|| format!("reading {}", args.dataset.display()))?;
    if loaded.stats.duplicates > 0 {
        tracing::warn!(dropped = loaded.stats.duplicates, "duplicate edges dropped");
    }
    let id = client
        .create_session(&CreateSession { m: args.m, mode: args.mode, n: args.n, seed: args.seed })
        .await?;
    let result = async {
        for chunk in loaded.edges.chunks(args.batch) {
            client.ingest(id, chunk).await?;
        }
        let params = QueryParams { filter: Some(args.filter), side: args.side, limit: Some(args.topk) };
        let top = client.query(id, &params).await?;
        let stats = client.stats(id).await?;
        anyhow::Ok((top, stats))
    }
    .await;
    let _ = client.delete_session(id).await;
    let (top, stats) = result?;

    let label = |side: Side, dense: u64| -> u64 {
        let labels = match side {
            Side::U => &loaded.u_labels,
            Side::V => &loaded.v_labels,
        };
        labels.get(dense as usize).copied().unwrap_or(dense)
    };
    let mut out = output(args.out.as_deref())?;
    match args.format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(["side", "a", "b", "estimate", "update_count"])?;
            for e in &top.entries {
                let side = e.key.side;
                w.write_record([
                    side.to_string(),
                    label(side, e.key.a).to_string(),
                    label(side, e.key.b).to_string(),
                    e.estimate.to_string(),
                    e.update_count.to_string(),
                ])?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            let entries: Vec<_> = top
                .entries
                .iter()
                .map(|e| {
                    serde_json::json!({
                        "side": e.key.side,
                        "a": label(e.key.side, e.key.a),
                        "b": label(e.key.side, e.key.b),
                        "estimate": e.estimate,
                        "update_count": e.update_count,
                    })
                })
                .collect();
            let doc = serde_json::json!({ "stats": stats, "total": top.total, "entries": entries });
            serde_json::to_writer_pretty(&mut out, &doc)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    eprintln!(
        "{} edges, sample {} of {}, {} estimates, z* {:.4}",
        stats.edges_seen, stats.sample_size, stats.capacity, stats.aggregate_size, stats.z_star
    );
    Ok(())
}
