//! `rinst`: robust untrained-prior recovery of corrupted time series.
//!
//! Exit codes: 0 success, 1 usage error, 2 numerical failure,
//! 3 diagnostic failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rinst_cli::config::BenchConfig;
use rinst_cli::diag;
use rinst_cli::harness::{ablate, emit_snr_bars, run_suite};
use rinst_cli::single::{parse_input, run_single};
use rinst_core::corruption::TaskKind;
use rinst_core::error::CoreError;

#[derive(Parser)]
#[command(
    name = "rinst",
    about = "Robust recovery of corrupted time series with an untrained network prior",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SingleArgs {
    /// CSV path, or synth:<kind>[:n=..][:seed=..][:channels=..]
    #[arg(long)]
    input: String,
    /// Scenario id (denoise: d1 d2 d3; impute: i1 i2; cs: cs20 cs50)
    #[arg(long)]
    scenario: String,
    /// gaussian|median|wiener|wavelet|tv|zero|mean|median-imp|spline|dip|rinst|noisy
    #[arg(long)]
    method: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Optional TOML config for solver settings and grids
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// CSV column indices (one channel each)
    #[arg(long, value_delimiter = ',', default_value = "0")]
    column: Vec<usize>,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
    /// Treat the first CSV row as a header
    #[arg(long, default_value_t = false)]
    header: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Recover from additive noise (identity operator)
    Denoise(SingleArgs),
    /// Recover missing samples (binary mask operator)
    Impute(SingleArgs),
    /// Recover from random projections (dense operator)
    Cs(SingleArgs),
    /// Run the full (dataset x scenario x method x seed) grid
    Bench {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Use the embedded desk-scale configuration
        #[arg(long, default_value_t = false)]
        default: bool,
        /// Override the configured output directory
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Single-switch ablations plus alpha and threshold sweeps
    Ablate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = false)]
        default: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Correctness and behavior diagnostics
    Diag {
        #[command(subcommand)]
        sub: DiagCommand,
    },
}

#[derive(Subcommand)]
enum DiagCommand {
    /// Finite-difference checks of every operation and the full network
    Gradcheck {
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
    /// Paired fit traces: structured target versus white noise
    Biascheck {
        #[arg(long, default_value_t = 1000)]
        iters: usize,
        #[arg(long, default_value_t = 3)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recovery quality on the original versus a time-permuted series
    Permute {
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
        seeds: Vec<u64>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_DIAGNOSTIC: u8 = 3;

fn load_config(path: &Option<PathBuf>, default: bool) -> Result<BenchConfig, CoreError> {
    match (path, default) {
        (Some(p), _) => BenchConfig::load(p),
        (None, true) => Ok(BenchConfig::default()),
        (None, false) => Err(CoreError::InvalidArg(
            "pass --config <file> or --default".into(),
        )),
    }
}

fn exit_code_for(err: &CoreError) -> u8 {
    match err {
        CoreError::InvalidArg(_) | CoreError::Csv(_) | CoreError::Io(_) => EXIT_USAGE,
        CoreError::ShapeMismatch(_) => EXIT_USAGE,
        CoreError::NonFinite(_) | CoreError::Numerical { .. } => EXIT_NUMERICAL,
    }
}

fn run_single_cmd(task: TaskKind, args: &SingleArgs) -> Result<(), CoreError> {
    let cfg = match &args.config {
        Some(p) => BenchConfig::load(p)?,
        None => BenchConfig::default(),
    };
    let dataset = parse_input(&args.input, &args.column, args.delimiter, args.header)?;
    let metrics = run_single(
        task,
        &dataset,
        &args.scenario,
        &args.method,
        args.seed,
        &cfg,
        &args.out,
    )?;
    println!(
        "{} {} {} seed {}: rmse {:.4} mae {:.4} snr {:.2} dB",
        dataset.name, args.scenario, args.method, args.seed, metrics.rmse, metrics.mae,
        metrics.snr_db
    );
    println!("outputs in {}", args.out.display());
    Ok(())
}

fn real_main() -> u8 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version are not errors
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };

    let outcome: Result<u8, CoreError> = (|| {
        match &cli.command {
            Command::Denoise(args) => run_single_cmd(TaskKind::Denoise, args).map(|_| EXIT_OK),
            Command::Impute(args) => run_single_cmd(TaskKind::Impute, args).map(|_| EXIT_OK),
            Command::Cs(args) => {
                run_single_cmd(TaskKind::CompressedSensing, args).map(|_| EXIT_OK)
            }
            Command::Bench { config, default, out } => {
                let mut cfg = load_config(config, *default)?;
                if let Some(dir) = out {
                    cfg.out_dir = dir.clone();
                }
                let report = run_suite(&cfg, None)?;
                report.write_csv(&cfg.out_dir)?;
                emit_snr_bars(&report, &cfg.out_dir)?;
                let failed = report.rows.iter().filter(|r| r.failed()).count();
                println!(
                    "{} rows ({} failed), {} aggregates -> {}",
                    report.rows.len(),
                    failed,
                    report.aggregates.len(),
                    cfg.out_dir.display()
                );
                Ok(EXIT_OK)
            }
            Command::Ablate { config, default, out } => {
                let mut cfg = load_config(config, *default)?;
                if let Some(dir) = out {
                    cfg.out_dir = dir.clone();
                }
                let report = ablate(&cfg, None)?;
                println!(
                    "{} ablation rows -> {}",
                    report.rows.len(),
                    cfg.out_dir.join("ablation").display()
                );
                Ok(EXIT_OK)
            }
            Command::Diag { sub } => match sub {
                DiagCommand::Gradcheck { seed } => {
                    let ok = diag::gradcheck(*seed)?;
                    println!("gradcheck: {}", if ok { "PASS" } else { "FAIL" });
                    Ok(if ok { EXIT_OK } else { EXIT_DIAGNOSTIC })
                }
                DiagCommand::Biascheck { iters, seed, out } => {
                    let ok = diag::biascheck(*iters, *seed, out.as_deref())?;
                    println!("biascheck: {}", if ok { "PASS" } else { "FAIL" });
                    Ok(if ok { EXIT_OK } else { EXIT_DIAGNOSTIC })
                }
                DiagCommand::Permute { seeds, config, out } => {
                    let cfg = match config {
                        Some(p) => BenchConfig::load(p)?,
                        None => BenchConfig::default(),
                    };
                    let (_rows, ok) = diag::permute_study(&cfg.solver, seeds, out.as_deref())?;
                    println!("permute: {}", if ok { "PASS" } else { "FAIL" });
                    Ok(if ok { EXIT_OK } else { EXIT_DIAGNOSTIC })
                }
            },
        }
    })();

    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(real_main())
}
