//! `swarmsel` — feature-selection experiments from the command line.
//!
//! Subcommands: `run` executes a configured experiment suite, `rank` dumps
//! the per-feature information-gain ranking of a CSV dataset, `synth`
//! generates a planted-feature benchmark dataset.
//!
//! Exit codes: 0 on success, 2 on configuration errors, 3 on data errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use swarmsel_core::dataset::{Dataset, LabelColumn};
use swarmsel_core::igfilter::rank_and_filter;
use swarmsel_core::pipeline::{self, generate_synthetic, suite_text, SuiteConfig};
use swarmsel_core::Error;

const THREADS_ENV: &str = "SWARMSEL_THREADS";

#[derive(Parser)]
#[command(name = "swarmsel", version, about = "Hybrid filter/wrapper feature selection")]
struct Cli {
    /// Worker threads for fitness evaluation (overrides config and the
    /// SWARMSEL_THREADS environment variable)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment suite described by a TOML config file
    Run(RunArgs),
    /// Rank the features of a dataset by information gain
    Rank(RankArgs),
    /// Generate a synthetic planted-feature dataset
    Synth(SynthArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file (see README for the schema)
    #[arg(long)]
    config: PathBuf,
    /// Override the config's output directory
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Run a single seed instead of the config's seed list
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RankArgs {
    /// Input CSV (header row, one sample per row, a label column)
    #[arg(long)]
    data: PathBuf,
    /// Equal-width bin count used for discretization
    #[arg(long, default_value_t = 10)]
    bins: usize,
    /// Selection threshold reported alongside the ranking
    #[arg(long, default_value_t = 0.0)]
    threshold: f64,
    /// Label column name (or 0-based index if numeric)
    #[arg(long, default_value = "class")]
    label_column: String,
    /// Write the ranking CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    samples: usize,
    /// Number of uninformative noise features
    #[arg(long)]
    noise: usize,
    /// Number of planted informative features
    #[arg(long)]
    informative: usize,
    #[arg(long)]
    classes: usize,
    /// Class separation in (0, 1]
    #[arg(long, default_value_t = 1.0)]
    sep: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output CSV path; the planted indices go to `<out>.informative.txt`
    #[arg(long)]
    out: PathBuf,
}

fn parse_label_column(raw: &str) -> LabelColumn {
    match raw.parse::<usize>() {
        Ok(index) => LabelColumn::Index(index),
        Err(_) => LabelColumn::Name(raw.to_string()),
    }
}

fn configure_threads(flag: Option<usize>, from_config: Option<usize>) -> Result<(), Error> {
    let from_env = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|raw| raw.parse::<usize>().ok());
    if let Some(n) = flag.or(from_config).or(from_env) {
        if n == 0 {
            return Err(Error::Config("thread count must be positive".to_string()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot configure thread pool: {e}")))?;
    }
    Ok(())
}

fn cmd_run(args: RunArgs, threads_flag: Option<usize>) -> Result<(), Error> {
    let raw = std::fs::read_to_string(&args.config).map_err(|e| {
        Error::Config(format!("cannot read config {}: {e}", args.config.display()))
    })?;
    let mut cfg: SuiteConfig =
        toml::from_str(&raw).map_err(|e| Error::Config(format!("bad config: {e}")))?;
    if let Some(dir) = args.out_dir {
        cfg.output_dir = dir;
    }
    if let Some(seed) = args.seed {
        cfg.seeds = vec![seed];
    }
    cfg.validate()?;
    configure_threads(threads_flag, cfg.threads)?;

    let reports = pipeline::run_suite(&cfg)?;
    print!("{}", suite_text(&reports));
    println!(
        "\nreport.csv, report.txt and per-method traces written to {}",
        cfg.output_dir.display()
    );
    Ok(())
}

fn cmd_rank(args: RankArgs, threads_flag: Option<usize>) -> Result<(), Error> {
    configure_threads(threads_flag, None)?;
    let raw = Dataset::load_csv(&args.data, &parse_label_column(&args.label_column))?;
    let scaled = raw.min_max_scale();
    let ranking = rank_and_filter(&scaled, args.bins, args.threshold)?;
    let names = scaled.feature_names().to_vec();
    match args.out {
        Some(path) => {
            let mut buf = Vec::new();
            ranking.write_csv(&names, &mut buf)?;
            std::fs::write(&path, buf).map_err(|source| Error::Io { path, source })?;
        }
        None => {
            let stdout = std::io::stdout();
            ranking.write_csv(&names, stdout.lock())?;
        }
    }
    log::info!(
        "{} of {} features above threshold {}",
        ranking.selected().len(),
        scaled.n_features(),
        args.threshold
    );
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<(), Error> {
    let synth = generate_synthetic(
        args.samples,
        args.noise,
        args.informative,
        args.classes,
        args.sep,
        args.seed,
    )?;
    synth.dataset.write_csv(&args.out)?;
    let sidecar = PathBuf::from(format!("{}.informative.txt", args.out.display()));
    let listing: String = synth
        .informative
        .iter()
        .map(|j| format!("{j}\n"))
        .collect();
    std::fs::write(&sidecar, listing).map_err(|source| Error::Io {
        path: sidecar.clone(),
        source,
    })?;
    println!(
        "wrote {} ({} samples, {} features, {} classes); planted indices in {}",
        args.out.display(),
        args.samples,
        args.noise + args.informative,
        args.classes,
        sidecar.display()
    );
    Ok(())
}

fn exit_code_for(error: &Error) -> u8 {
    if error.is_data_error() {
        3
    } else {
        match error {
            Error::Config(_) | Error::InvalidParam(_) => 2,
            _ => 1,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args, cli.threads),
        Command::Rank(args) => cmd_rank(args, cli.threads),
        Command::Synth(args) => cmd_synth(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
