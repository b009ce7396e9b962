//! Thin command-line front end over the library entry points.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use evostream::cli::{
    cmd_bench, cmd_generate, cmd_run, cmd_sweep, default_seed, CliError, ModelKind, RunConfig,
};

#[derive(Parser)]
#[command(name = "evostream", about = "Online text-stream clustering and classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Model: osdm | osgm | osgm-es | eindm | osmtc
    #[arg(long)]
    model: String,
    /// Input JSONL stream
    #[arg(long)]
    input: PathBuf,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Optional TOML config file (flags win over file values)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Parameter overrides, e.g. --set alpha=0.01 (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Metric reporting window
    #[arg(long)]
    window: Option<u64>,
    /// RNG seed (falls back to EVOSTREAM_SEED, then 42)
    #[arg(long)]
    seed: Option<u64>,
    /// Override the stream's reveal flags to this labeled fraction
    #[arg(long)]
    labeled_ratio: Option<f64>,
    /// Enable suffix stemming during preprocessing
    #[arg(long)]
    stem: bool,
    /// Stopword list file (one word per line)
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Skip malformed stream lines with a warning instead of aborting
    #[arg(long)]
    skip_bad_lines: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Expand a TOML synthesis spec into a ground-truthed JSONL stream
    Generate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one model over a stream and write logs plus a report
    Run(RunArgs),
    /// Run the Cartesian product of a parameter grid
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Grid, e.g. "alpha=1e-3,1e-2;beta=0.01,0.02"
        #[arg(long)]
        grid: String,
    },
    /// Measure throughput and footprint over stream prefixes
    Bench {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated prefix sizes, e.g. 1000,2000,4000
        #[arg(long)]
        sizes: String,
    },
}

fn build_config(args: &RunArgs) -> Result<RunConfig, CliError> {
    let model: ModelKind = args.model.parse().map_err(CliError::Config)?;
    let mut cfg = RunConfig::new(model, args.input.clone(), args.out.clone());
    if let Some(path) = &args.config {
        cfg.apply_config_file(path)?;
    }
    for kv in &args.sets {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set '{kv}' lacks '='")))?;
        cfg.apply_override(k, v)?;
    }
    if let Some(w) = args.window {
        cfg.window = w;
    }
    cfg.seed = args.seed.unwrap_or_else(default_seed);
    if let Some(r) = args.labeled_ratio {
        cfg.labeled_ratio = Some(r);
    }
    cfg.stem |= args.stem;
    cfg.stopword_file = args.stopwords.clone();
    cfg.skip_bad_lines = args.skip_bad_lines;
    Ok(cfg)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate { spec, out } => {
            let n = cmd_generate(&spec, &out)?;
            println!("wrote {n} documents to {}", out.display());
        }
        Command::Run(args) => {
            let cfg = build_config(&args)?;
            let artifacts = cmd_run(&cfg)?;
            println!("run complete: {}", artifacts.out_dir.display());
            for (k, v) in &artifacts.report.final_metrics {
                println!("  {k}: {v:.4}");
            }
            println!(
                "  docs/sec: {:.0}, peak clusters: {}",
                artifacts.report.perf.docs_per_sec, artifacts.report.perf.peak_clusters
            );
        }
        Command::Sweep { run, grid } => {
            let cfg = build_config(&run)?;
            let (rows, csv) = cmd_sweep(&cfg, &grid)?;
            let failures = rows.iter().filter(|r| r.error.is_some()).count();
            println!(
                "sweep complete: {} runs ({failures} failed), table at {}",
                rows.len(),
                csv.display()
            );
        }
        Command::Bench { run, sizes } => {
            let cfg = build_config(&run)?;
            let sizes: Vec<usize> = sizes
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|e| CliError::Config(format!("size '{s}': {e}")))
                })
                .collect::<Result<_, _>>()?;
            let rows = cmd_bench(&cfg, &sizes)?;
            println!("size,total_ms,docs_per_sec,peak_clusters,peak_cooc_entries");
            for r in &rows {
                println!(
                    "{},{},{:.0},{},{}",
                    r.size, r.total_ms, r.docs_per_sec, r.peak_clusters, r.peak_cooc_entries
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
