//! `isac`: Monte Carlo localization experiments, sweeps and ranging checks.
//!
//! Exit status is 0 on success, 1 for configuration or usage errors and 2 for
//! runtime failures.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use isac_core::harness::{
    emit_ranging, emit_report, emit_sweep, run_experiment, run_ranging_check, run_sweep, ExperimentConfig,
    ExperimentMode, MethodSummary, SweepKind,
};
use isac_core::Error;

const DEFAULT_OUTPUT: &str = "results";

#[derive(Parser)]
#[command(
    name = "isac",
    version,
    about = "Multistatic ISAC passive-target localization experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// TOML experiment configuration; built-in defaults when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir` in the config).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Override the base seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write summary.json, trials.csv and cdf.csv.
    Run {
        #[command(flatten)]
        common: Common,
        /// Override the trial count.
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
    },
    /// Validate phy-mode ranging against the half-bin quantization bound.
    RangingCheck {
        #[command(flatten)]
        common: Common,
        /// Override the number of random geometries.
        #[arg(long)]
        geometries: Option<usize>,
        /// Per-subcarrier SNR in dB; noise-free when omitted from both flag and config.
        #[arg(long)]
        snr_db: Option<f64>,
    },
    /// Sweep the outlier magnitude or the node counts.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        trials: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Model,
    Phy,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Outlier,
    Nodes,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn load(common: &Common) -> Result<(ExperimentConfig, PathBuf), Failure> {
    let mut cfg = match &common.config {
        // An unreadable config file is a configuration problem, not a runtime one.
        Some(path) => ExperimentConfig::load(path).map_err(|e| match e {
            Error::Io { .. } => Failure::Config(e.to_string()),
            e => Failure::from(e),
        })?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.base_seed = seed;
    }
    let output = common
        .output
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT));
    Ok((cfg, output))
}

fn print_summary(rows: &[MethodSummary]) {
    println!(
        "{:<10} {:>10} {:>10} {:>10} {:>9}",
        "method", "mean_m", "p90_m", "converged", "diverged"
    );
    for s in rows {
        println!(
            "{:<10} {:>10.4} {:>10.4} {:>10} {:>9}",
            s.method.label(),
            s.mean_m,
            s.p90_m,
            s.converged,
            s.diverged
        );
    }
}

fn print_written(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { common, trials, mode } => {
            let (mut cfg, output) = load(&common)?;
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if let Some(m) = mode {
                cfg.mode = match m {
                    Mode::Model => ExperimentMode::Model,
                    Mode::Phy => ExperimentMode::Phy,
                };
            }
            cfg.validate()?;
            let report = run_experiment(&cfg)?;
            print_summary(&report.summary);
            print_written(&emit_report(&report, &output)?);
        }
        Command::RangingCheck {
            common,
            geometries,
            snr_db,
        } => {
            let (mut cfg, output) = load(&common)?;
            if let Some(g) = geometries {
                cfg.ranging.geometries = g;
            }
            if let Some(snr) = snr_db {
                cfg.ranging.snr_db = snr;
            }
            let report = run_ranging_check(&cfg)?;
            println!(
                "range resolution {:.4} m, unambiguous range {:.2} m",
                report.range_resolution, report.unambiguous_range
            );
            println!(
                "{}/{} links within half a bin; max |error| {:.4} m, mean |error| {:.4} m",
                report.within_half_bin, report.links, report.max_abs_error, report.mean_abs_error
            );
            print_written(&emit_ranging(&report, &output)?);
        }
        Command::Sweep { common, kind, trials } => {
            let (mut cfg, output) = load(&common)?;
            if let Some(t) = trials {
                cfg.trials = t;
            }
            cfg.validate()?;
            let kind = match kind {
                Kind::Outlier => SweepKind::Outlier,
                Kind::Nodes => SweepKind::Nodes,
            };
            let report = run_sweep(&cfg, kind)?;
            for p in &report.points {
                println!("S={} K={} outlier_max={} m", p.num_gnbs, p.num_ues, p.outlier_max);
                print_summary(&p.summary);
            }
            print_written(&emit_sweep(&report, &output)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
