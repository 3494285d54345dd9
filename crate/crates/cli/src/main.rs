//! `lemane` — node embeddings from learned hop-stopping probabilities.
//!
//! Subcommands mirror the pipeline stages: `train` learns a stopping
//! schedule on subsamples, `embed` pushes + factorizes the full graph under
//! a stored schedule, `eval` scores embeddings on link prediction or node
//! classification, `sample` exposes one training subgraph for inspection,
//! and `pipeline` chains the three stages with a single manifest.
//!
//! Exit codes: 0 success, 2 configuration/usage error, 3 unreadable or
//! malformed data file, 4 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lemane_core::{Error, Result};

mod commands;
mod config;
mod manifest;

use commands::OutDir;
use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "lemane",
    version,
    about = "Node embeddings from learned hop-stopping probabilities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn a stopping-probability schedule on training subsamples
    Train(CommonArgs),
    /// Generate embeddings for the full graph under a stored schedule
    Embed(CommonArgs),
    /// Score stored embeddings on the configured task
    Eval(CommonArgs),
    /// Draw the first BFS training subgraph and write it out
    Sample(CommonArgs),
    /// Train, embed, and evaluate in one run
    Pipeline(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Config file: `key = value` lines under [graph]/[train]/[embed]/[eval]
    #[arg(long)]
    config: Option<PathBuf>,

    /// Edge-list file, one `u v` pair per line (overrides [graph] path)
    #[arg(long)]
    graph: Option<PathBuf>,

    /// Treat the edge list as directed
    #[arg(long)]
    directed: bool,

    /// Label file, one `node class` pair per line (overrides [graph] labels)
    #[arg(long)]
    labels: Option<PathBuf>,

    /// Directory for artifacts and manifests
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Run seed; every random stream derives from it (overrides [train] seed)
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,

    /// Task: link or class (overrides [train] task)
    #[arg(long)]
    task: Option<String>,

    /// Push threshold; sets both the training and embedding value
    #[arg(long)]
    delta: Option<f64>,

    /// Embedding dimension; sets both the training and embedding value
    #[arg(long)]
    dim: Option<usize>,

    /// Schedule file for `embed` (default: <out>/schedule.tsv)
    #[arg(long)]
    schedule: Option<PathBuf>,
}

/// Config file (if any) overlaid with flag overrides, then validated.
fn build_config(args: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        // A broken config file is a usage error regardless of the underlying
        // failure (unreadable, unparsable), so it maps to exit code 2.
        Some(path) => RunConfig::load(path)
            .map_err(|e| Error::InvalidParameter(format!("config file: {e}")))?,
        None => RunConfig::default(),
    };
    if let Some(p) = &args.graph {
        cfg.graph.path = Some(p.clone());
    }
    if args.directed {
        cfg.graph.directed = true;
    }
    if let Some(p) = &args.labels {
        cfg.graph.labels = Some(p.clone());
    }
    if let Some(s) = args.seed {
        cfg.train.seed = s;
    }
    if let Some(t) = &args.task {
        cfg.train.task = config::parse_task(t)?;
    }
    if let Some(d) = args.delta {
        cfg.train.delta = d;
        cfg.embed.delta = d;
    }
    if let Some(d) = args.dim {
        cfg.train.dim = d;
        cfg.embed.dim = d;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let (Command::Train(args)
    | Command::Embed(args)
    | Command::Eval(args)
    | Command::Sample(args)
    | Command::Pipeline(args)) = &cli.command;

    if let Some(t) = args.threads {
        if t == 0 {
            return Err(Error::InvalidParameter("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    }
    let cfg = build_config(args)?;
    let out = OutDir::new(&args.out)?;
    match &cli.command {
        Command::Train(_) => commands::cmd_train(&cfg, &out),
        Command::Embed(a) => commands::cmd_embed(&cfg, &out, a.schedule.as_deref()),
        Command::Eval(_) => commands::cmd_eval(&cfg, &out),
        Command::Sample(_) => commands::cmd_sample(&cfg, &out),
        Command::Pipeline(_) => commands::cmd_pipeline(&cfg, &out),
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::InvalidParameter(_) => 2,
        Error::Io { .. } | Error::Parse { .. } => 3,
        Error::Numerical(_) | Error::Internal(_) => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
