//! `ibilab`: runs DPSS, S2IBI, bound and BER experiments and writes CSV tables.

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ibi_core::PRNG_ID;

use commands::CliError;
use config::ExperimentConfig;
use output::{Clock, Manifest, RunOutputs};

#[derive(Debug, Parser)]
#[command(name = "ibilab", version, about = "Inter-block interference experiments")]
struct Cli {
    /// JSON experiment config (`-` reads standard input).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory for tables and manifest.json.
    #[arg(long = "out", value_name = "DIR", default_value = ".")]
    out_dir: PathBuf,
    /// Overrides the config seed.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N", env = "IBILAB_THREADS")]
    threads: Option<usize>,
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Discrete prolate spheroidal sequences.
    Dpss {
        #[command(subcommand)]
        action: DpssAction,
    },
    /// Exact S2IBI over domains and utilizations.
    S2ibi {
        #[arg(long, value_name = "FILE", default_value = "s2ibi.csv")]
        out: PathBuf,
    },
    /// Prolate-eigenvalue IBI bound over domains and utilizations.
    Bound {
        #[arg(long, value_name = "FILE", default_value = "bound.csv")]
        out: PathBuf,
    },
    /// Monte-Carlo BER versus SNR.
    Ber {
        #[arg(long, value_name = "FILE", default_value = "ber.csv")]
        out: PathBuf,
    },
    /// S2IBI and BER tables for all four channel presets.
    ReproducePaper,
}

#[derive(Debug, Subcommand)]
enum DpssAction {
    /// Writes eigenvalues (header row) and one column per sequence.
    Dump {
        #[arg(long, value_name = "N")]
        length: Option<usize>,
        #[arg(long, value_name = "W")]
        half_bandwidth: Option<f64>,
        #[arg(long, value_name = "K")]
        order: Option<usize>,
        #[arg(long, value_name = "FILE", default_value = "dpss.csv")]
        out: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Dpss { .. } => "dpss dump",
            Command::S2ibi { .. } => "s2ibi",
            Command::Bound { .. } => "bound",
            Command::Ber { .. } => "ber",
            Command::ReproducePaper => "reproduce-paper",
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Command::Dpss {
        action:
            DpssAction::Dump {
                length,
                half_bandwidth,
                order,
                ..
            },
    } = &cli.command
    {
        cfg.dpss.length = length.unwrap_or(cfg.dpss.length);
        cfg.dpss.half_bandwidth = half_bandwidth.unwrap_or(cfg.dpss.half_bandwidth);
        cfg.dpss.order = order.unwrap_or(cfg.dpss.order);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve_config(cli)?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let clock = Clock::start();
    let mut out = RunOutputs::new(&cli.out_dir)?;
    match &cli.command {
        Command::Dpss {
            action: DpssAction::Dump { out: file, .. },
        } => commands::dpss_dump(&cfg.dpss, &mut out, file)?,
        Command::S2ibi { out: file } => commands::s2ibi(&cfg, &mut out, file)?,
        Command::Bound { out: file } => commands::bound(&cfg, &mut out, file)?,
        Command::Ber { out: file } => commands::ber(&cfg, &mut out, file)?,
        Command::ReproducePaper => commands::reproduce(&cfg, &mut out)?,
    }
    let manifest = Manifest {
        command: cli.command.name().to_string(),
        version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed,
        prng: PRNG_ID,
        threads: rayon::current_num_threads(),
        started_unix_s: clock.started_unix_s(),
        wall_clock_s: clock.elapsed_s(),
        outputs: out.files(),
        config: cfg,
    };
    out.write_manifest(&manifest)?;
    log::info!(
        "wrote {} in {:.1} s",
        Path::new(&cli.out_dir).display(),
        manifest.wall_clock_s
    );
    out.commit();
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.verbose {
            log::LevelFilter::Info
        } else {
            log::LevelFilter::Warn
        })
        .format_timestamp(None)
        .init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ibilab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
