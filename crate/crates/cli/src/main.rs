//! `toponav`: build maps, run simulated navigation, evaluate retrieval and
//! benchmark subgoal selection.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use toponav::eval::ReportFormat;
use toponav::localization::Selector;

use crate::config::{RecallMethodKind, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "toponav", version, about = "Topological route navigation with place-recognition subgoal selection")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every command. Unset flags fall back to the config file,
/// then to the built-in defaults shown in brackets.
#[derive(Debug, Args)]
struct GlobalArgs {
    /// JSON run configuration
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Base seed; episode i uses seed + i [default: 0]
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory [default: out]
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Report format [default: csv]
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// Localizer; a comma-separated list runs a paired comparison [default: bayes]
    #[arg(long, global = true, value_enum, value_delimiter = ',')]
    selector: Option<Vec<SelectorArg>>,
    /// Motion model lower bound, in nodes per step [default: -1]
    #[arg(long = "w-l", global = true, allow_negative_numbers = true)]
    w_l: Option<i64>,
    /// Motion model upper bound, in nodes per step [default: 2]
    #[arg(long = "w-u", global = true, allow_negative_numbers = true)]
    w_u: Option<i64>,
    /// Likelihood ratio between the best and the mean node on the first query [default: 4.0]
    #[arg(long, global = true)]
    kappa: Option<f64>,
    /// Sliding-window width, odd [default: 5]
    #[arg(long, global = true)]
    window_size: Option<usize>,
    /// Minimum predicted temporal distance for a pairwise subgoal [default: 3.0]
    #[arg(long, global = true)]
    pairwise_threshold: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SelectorArg {
    Bayes,
    Window,
    Global,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    EmbeddingNn,
    PairwiseStub,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Reference-run maps
    Map {
        #[command(subcommand)]
        cmd: MapCmd,
    },
    /// Simulated navigation episodes
    Sim {
        #[command(subcommand)]
        cmd: SimCmd,
    },
    /// Retrieval evaluation
    Eval {
        #[command(subcommand)]
        cmd: EvalCmd,
    },
    /// Latency benchmarks
    Bench {
        #[command(subcommand)]
        cmd: BenchCmd,
    },
}

#[derive(Debug, Subcommand)]
enum MapCmd {
    /// Build a map directory from an embedding file and its sidecar
    Build(MapBuildArgs),
}

#[derive(Debug, Args)]
struct MapBuildArgs {
    /// Embedding file; `<name>.meta.json` must sit next to it
    #[arg(long, value_name = "PATH")]
    input: Option<PathBuf>,
    /// Keep every n-th frame plus the last [default: 1]
    #[arg(long)]
    stride: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum SimCmd {
    /// Run episodes and write episodes.jsonl plus a summary table
    Run(SimRunArgs),
}

#[derive(Debug, Args)]
struct SimRunArgs {
    /// Episodes per selector [default: 100]
    #[arg(long)]
    episodes: Option<usize>,
    /// Start the robot at the middle node while the window starts at node 0
    #[arg(long)]
    kidnapped: bool,
    /// Add a 10-node bursty region in the middle of the route
    #[arg(long)]
    bursty: bool,
    /// Navigate a built map directory instead of generated worlds
    #[arg(long, value_name = "DIR")]
    map: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum EvalCmd {
    /// Recall@N of queries against a database, positives within a radius
    Recall(RecallArgs),
}

#[derive(Debug, Args)]
struct RecallArgs {
    /// Query embedding file (sidecar positions required)
    #[arg(long, value_name = "PATH")]
    queries: Option<PathBuf>,
    /// Database embedding file (sidecar positions required)
    #[arg(long, value_name = "PATH")]
    database: Option<PathBuf>,
    /// Cut-offs, comma-separated [default: 1,5,10]
    #[arg(short = 'n', long = "n", value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Positive radius in meters [default: 25]
    #[arg(long)]
    radius: Option<f64>,
    /// Ranking method [default: embedding-nn]
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
}

#[derive(Debug, Subcommand)]
enum BenchCmd {
    /// Selection latency versus candidate count for both methods
    Runtime(RuntimeArgs),
}

#[derive(Debug, Args)]
struct RuntimeArgs {
    /// Candidate counts, ascending [default: 5,21,101]
    #[arg(long, value_delimiter = ',')]
    counts: Option<Vec<usize>>,
    /// Embedding dimension [default: 512]
    #[arg(long)]
    dim: Option<usize>,
    /// Synthetic flops per network pass [default: 2000000]
    #[arg(long)]
    flops: Option<u64>,
    /// Timed repetitions per count, at least 5 [default: 5]
    #[arg(long)]
    reps: Option<usize>,
}

fn selector(s: SelectorArg) -> Selector {
    match s {
        SelectorArg::Bayes => Selector::Bayes,
        SelectorArg::Window => Selector::Window,
        SelectorArg::Global => Selector::Global,
    }
}

impl GlobalArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }
        if let Some(v) = self.format {
            cfg.format = match v {
                FormatArg::Json => ReportFormat::Json,
                FormatArg::Csv => ReportFormat::Csv,
            };
        }
        if let Some(list) = &self.selector {
            let list: Vec<Selector> = list.iter().copied().map(selector).collect();
            if let Some(&first) = list.first() {
                cfg.localizer.selector = first;
            }
            cfg.sim.selectors = if list.len() > 1 { list } else { Vec::new() };
        }
        if let Some(v) = self.w_l {
            cfg.localizer.w_l = v;
        }
        if let Some(v) = self.w_u {
            cfg.localizer.w_u = v;
        }
        if let Some(v) = self.kappa {
            cfg.localizer.kappa = v;
        }
        if let Some(v) = self.window_size {
            cfg.localizer.window_size = v;
        }
        if let Some(v) = self.pairwise_threshold {
            cfg.pairwise_threshold = v;
        }
    }
}

impl Command {
    fn apply(&self, cfg: &mut RunConfig) {
        match self {
            Command::Map {
                cmd: MapCmd::Build(a),
            } => {
                if let Some(v) = &a.input {
                    cfg.map.input = Some(v.clone());
                }
                if let Some(v) = a.stride {
                    cfg.map.stride = v;
                }
            }
            Command::Sim {
                cmd: SimCmd::Run(a),
            } => {
                if let Some(v) = a.episodes {
                    cfg.sim.episodes = v;
                }
                cfg.sim.kidnapped |= a.kidnapped;
                cfg.sim.bursty |= a.bursty;
                if let Some(v) = &a.map {
                    cfg.sim.map = Some(v.clone());
                }
            }
            Command::Eval {
                cmd: EvalCmd::Recall(a),
            } => {
                if let Some(v) = &a.queries {
                    cfg.recall.queries = Some(v.clone());
                }
                if let Some(v) = &a.database {
                    cfg.recall.database = Some(v.clone());
                }
                if let Some(v) = &a.n {
                    cfg.recall.n = v.clone();
                }
                if let Some(v) = a.radius {
                    cfg.recall.radius = v;
                }
                if let Some(v) = a.method {
                    cfg.recall.method = match v {
                        MethodArg::EmbeddingNn => RecallMethodKind::EmbeddingNn,
                        MethodArg::PairwiseStub => RecallMethodKind::PairwiseStub,
                    };
                }
            }
            Command::Bench {
                cmd: BenchCmd::Runtime(a),
            } => {
                if let Some(v) = &a.counts {
                    cfg.bench.counts = v.clone();
                }
                if let Some(v) = a.dim {
                    cfg.bench.dim = v;
                }
                if let Some(v) = a.flops {
                    cfg.bench.flops = v;
                }
                if let Some(v) = a.reps {
                    cfg.bench.reps = v;
                }
            }
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = RunConfig::load(cli.global.config.as_deref())?;
    cli.global.apply(&mut cfg);
    cli.command.apply(&mut cfg);
    cfg.validate()?;
    match cli.command {
        Command::Map { .. } => commands::map_build(&cfg),
        Command::Sim { .. } => commands::sim_run(&cfg),
        Command::Eval { .. } => commands::eval_recall(&cfg),
        Command::Bench { .. } => commands::bench_runtime(&cfg),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
