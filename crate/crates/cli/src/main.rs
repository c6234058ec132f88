use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hinbal::config::RunConfig;
use hinbal::error::CliError;
use hinbal::report::Format;
use hinbal::{pipeline, report, sweep};

/// Influence-guided minority oversampling for heterogeneous graphs.
///
/// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
#[derive(Parser, Debug)]
#[command(name = "hinbal", version, propagate_version = true)]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Master seed; overrides `train.seed` from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// TOML run config, or `default` for the built-in defaults.
    #[arg(long, global = true, default_value = "default")]
    config: String,

    /// Worker threads for sweeps (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a planted benchmark dataset.
    Gen {
        #[arg(long, value_parser = ["tiny", "desk"])]
        preset: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate a dataset, build a split if it has none, write it back with a summary.
    Ingest {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute influence tables and candidate lists.
    Influence {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Synthesize minority nodes and write the augmented dataset.
    Augment {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write influence scores and candidates here.
        #[arg(long)]
        dump_influence: Option<PathBuf>,
    },
    /// Train and evaluate; writes metrics, training log and checkpoint.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a checkpoint on a dataset.
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a hyper-parameter grid.
    Sweep {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Replace an axis with its standard grid (repeatable).
        #[arg(long, value_parser = ["mu", "temperature", "lambda1", "lambda2"])]
        grid: Vec<String>,
        /// Seeds to run every grid point with (overrides `sweep.seeds`).
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
    },
    /// Aggregate sweep results into mean ± std tables.
    Report {
        /// results.jsonl or results.csv files.
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
        format: OutFormat,
        /// Group only by these axes (mu, temperature, lambda1, lambda2, imbalance_ratio).
        #[arg(long, value_delimiter = ',')]
        by: Vec<String>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

fn resolve(common: &Common) -> hinbal::Result<RunConfig> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(s) = common.seed {
        cfg.train.seed = s;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> hinbal::Result<()> {
    if cli.common.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.common.threads)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    match &cli.command {
        Command::Gen { preset, out } => {
            pipeline::gen(preset, cli.common.seed, out)?;
        }
        Command::Ingest { data, out } => {
            let s = pipeline::ingest(data, &resolve(&cli.common)?, out)?;
            log::info!("train class counts {:?}", s.train_counts);
        }
        Command::Influence { data, out } => {
            pipeline::influence(data, &resolve(&cli.common)?, out)?;
        }
        Command::Augment { data, out, dump_influence } => {
            let m = pipeline::augment_cmd(data, &resolve(&cli.common)?, out, dump_influence.as_deref())?;
            log::info!("wrote {} synthetic nodes", m.count);
        }
        Command::Train { data, out } => {
            let m = pipeline::train(data, &resolve(&cli.common)?, out)?;
            log::info!(
                "test ACC {:.4} BACC {:.4} macro-F1 {:.4}",
                m.test.accuracy,
                m.test.balanced_accuracy,
                m.test.macro_f1
            );
        }
        Command::Eval { data, checkpoint, out } => {
            pipeline::eval(data, checkpoint, out)?;
        }
        Command::Sweep { data, out, grid, seeds } => {
            let mut cfg = resolve(&cli.common)?;
            for g in grid {
                sweep::apply_preset(&mut cfg, g)?;
            }
            if !seeds.is_empty() {
                cfg.sweep.seeds = seeds.clone();
            }
            let rows = sweep::sweep(data, &cfg, out)?;
            let failed = rows.iter().filter(|r| r.status != "ok").count();
            log::info!("{} runs, {failed} failed", rows.len());
        }
        Command::Report { input, out, format, by } => {
            let inputs: Vec<&Path> = input.iter().map(PathBuf::as_path).collect();
            let by: Vec<&str> = by.iter().map(String::as_str).collect();
            let format = match format {
                OutFormat::Csv => Format::Csv,
                OutFormat::Json => Format::Json,
            };
            report::report(&inputs, &by, format, out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
