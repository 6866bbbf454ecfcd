use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use permlab::acceptance::{report_bundle, Caps, CRITERIA};
use permlab::diagrams::DiagramKind;
use permlab::runner::{run, write_output, ErrorRecord, ExperimentConfig, Format, Task};
use permlab::{PermlabError, Result};

#[derive(Parser, Debug)]
#[command(name = "permlab", version, about = "Interchange-process experiments on the periodic lattice")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "PERMLAB_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one experiment and write its result envelope.
    Run(RunArgs),
    /// Run acceptance criteria and print a summary table.
    Bundle(BundleArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// JSON experiment config; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_task)]
    task: Option<Task>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    edge: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    time: Option<f64>,
    /// `a:b:step`, both ends included.
    #[arg(long, conflicts_with = "time")]
    time_grid: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    r: Option<f64>,
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    format: Option<Format>,
    #[arg(long)]
    cap_states: Option<u64>,
    #[arg(long)]
    cap_group: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    /// Particle count for `diagrams`.
    #[arg(long)]
    n: Option<usize>,
    /// `lower-limits` or `full`.
    #[arg(long, value_parser = parse_kind)]
    kind: Option<DiagramKind>,
    /// Comma-separated lattice edges (`diagrams` scan) or vertex counts (`eq51`).
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<u64>>,
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    z: Option<f64>,
    /// Exact rational such as `3/10`.
    #[arg(long)]
    rho: Option<String>,
    #[arg(long)]
    max_index: Option<usize>,
    /// Record wall-clock runtime in the envelope.
    #[arg(long)]
    timing: bool,
}

#[derive(Args, Debug)]
struct BundleArgs {
    /// Comma-separated criterion numbers; all 13 by default.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    criteria: Option<Vec<u32>>,
    #[arg(long)]
    cap_states: Option<u64>,
    #[arg(long)]
    cap_group: Option<u64>,
    /// Directory for per-criterion artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_task(s: &str) -> std::result::Result<Task, String> {
    s.parse().map_err(|e: PermlabError| e.to_string())
}

fn parse_format(s: &str) -> std::result::Result<Format, String> {
    match s {
        "json" => Ok(Format::Json),
        "csv" => Ok(Format::Csv),
        _ => Err(format!("unknown format `{s}` (json or csv)")),
    }
}

fn parse_kind(s: &str) -> std::result::Result<DiagramKind, String> {
    match s {
        "lower-limits" => Ok(DiagramKind::LowerLimits),
        "full" => Ok(DiagramKind::Full),
        _ => Err(format!("unknown kind `{s}` (lower-limits or full)")),
    }
}

fn build_config(args: RunArgs, threads: Option<usize>) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| PermlabError::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
            let mut cfg = ExperimentConfig::from_json(&text)?;
            if let Some(task) = args.task {
                cfg.task = task;
            }
            cfg
        }
        None => ExperimentConfig::new(
            args.task.ok_or_else(|| PermlabError::InvalidConfig("--task or --config is required".into()))?,
        ),
    };
    macro_rules! set {
        ($($field:ident),*) => { $( if let Some(v) = args.$field { cfg.$field = v; } )* };
    }
    macro_rules! set_opt {
        ($($field:ident),*) => { $( if args.$field.is_some() { cfg.$field = args.$field; } )* };
    }
    set!(dim, edge, r, seed, format);
    if args.time.is_some() {
        cfg.time = args.time;
        cfg.time_grid = None;
    }
    if args.time_grid.is_some() {
        cfg.time_grid = args.time_grid;
        cfg.time = None;
    }
    set_opt!(order, step, out, cap_states, cap_group, samples, n, kind, sizes, scale, z, rho, max_index);
    if threads.is_some() {
        cfg.threads = threads;
    }
    cfg.timing |= args.timing;
    cfg.validate()?;
    Ok(cfg)
}

fn init_threads(threads: Option<usize>) -> Result<()> {
    match threads {
        Some(0) => Err(PermlabError::InvalidConfig("threads must be ≥ 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| PermlabError::InvalidConfig(e.to_string())),
        None => Ok(()),
    }
}

fn fail(e: &PermlabError) -> ExitCode {
    let record = ErrorRecord::from(e);
    eprintln!("{}", record.to_json());
    ExitCode::from(record.exit_code as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads(cli.threads) {
        return fail(&e);
    }
    match cli.command {
        Command::Run(args) => {
            let outcome = build_config(args, cli.threads)
                .and_then(|cfg| run(&cfg).and_then(|out| write_output(&cfg, &out, std::io::stdout().lock())));
            match outcome {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(&e),
            }
        }
        Command::Bundle(args) => {
            let defaults = Caps::default();
            let caps = Caps {
                states: args.cap_states.unwrap_or(defaults.states),
                group: args.cap_group.unwrap_or(defaults.group),
            };
            let ids = args.criteria.unwrap_or_else(|| CRITERIA.to_vec());
            match report_bundle(&ids, caps, args.out.as_deref()) {
                Ok(summary) => {
                    print!("{}", summary.table());
                    if summary.all_passed() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => fail(&e),
            }
        }
    }
}
