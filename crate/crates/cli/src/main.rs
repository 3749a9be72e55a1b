//! Command line front end: single experiment runs, five-way comparisons and
//! channel conditioning probes, with CSV artifacts for plotting.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use eqsim::channel::eigen_spread_2;
use eqsim::equalizer::Algorithm;
use eqsim::harness::{
    compare_algorithms, convergence_metrics, generate_signals, run_experiment,
    ChannelId, CompareConfig, ComparisonTable, ExperimentConfig, RunRecord,
    DEFAULT_NOISE_VARIANCE, DEFAULT_SYMBOLS, DEFAULT_WINDOW,
};

const EXIT_USAGE: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(
    name = "eqsim",
    version,
    about = "Simulate trained LMS and blind constant-modulus equalizers over dispersive channels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm on one channel and write curve, constellation and
    /// weight CSVs.
    Run(RunArgs),
    /// Run all five algorithms on one channel and write the comparison table.
    Compare(CompareArgs),
    /// Print the eigenvalue spread of the equalizer input for a channel.
    Eigen(EigenArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Channel model: h1 or h2.
    #[arg(long, value_parser = parse_channel)]
    channel: ChannelId,
    /// Algorithm: lms, cma11, cma12, cma21 or cma22.
    #[arg(long, value_parser = parse_algorithm)]
    algo: Algorithm,
    /// Number of symbols to simulate.
    #[arg(long, default_value_t = DEFAULT_SYMBOLS)]
    symbols: usize,
    /// Experiment seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Equalizer tap count (default: 8 for lms, 2 for cma*).
    #[arg(long)]
    eq_len: Option<usize>,
    /// Adaptation step size (default: 0.007 for lms, 0.001 for cma*).
    #[arg(long, allow_negative_numbers = true)]
    step: Option<f64>,
    /// Total complex noise variance added at the channel output.
    #[arg(long, default_value_t = DEFAULT_NOISE_VARIANCE, allow_negative_numbers = true)]
    noise_var: f64,
    /// Training delay in symbols (lms only).
    #[arg(long, default_value_t = 0)]
    train_delay: usize,
    /// Smoothing window for the learning curve.
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    window: usize,
    /// Output path prefix for the CSV files.
    #[arg(long, default_value = "./out")]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// Channel model: h1 or h2.
    #[arg(long, value_parser = parse_channel)]
    channel: ChannelId,
    /// Number of symbols per run.
    #[arg(long, default_value_t = DEFAULT_SYMBOLS)]
    symbols: usize,
    /// Experiment seed shared by all five runs.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Total complex noise variance added at the channel output.
    #[arg(long, default_value_t = DEFAULT_NOISE_VARIANCE, allow_negative_numbers = true)]
    noise_var: f64,
    /// Training delay in symbols (lms row only).
    #[arg(long, default_value_t = 0)]
    train_delay: usize,
    /// Smoothing window for the learning curves.
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    window: usize,
    /// Output path prefix for the table CSV.
    #[arg(long, default_value = "./out")]
    out: PathBuf,
}

#[derive(Args)]
struct EigenArgs {
    /// Channel model: h1 or h2.
    #[arg(long, value_parser = parse_channel)]
    channel: ChannelId,
    /// Number of symbols to probe with.
    #[arg(long, default_value_t = DEFAULT_SYMBOLS)]
    symbols: usize,
    /// Experiment seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_channel(s: &str) -> Result<ChannelId, String> {
    s.parse().map_err(|e: eqsim::Error| e.to_string())
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: eqsim::Error| e.to_string())
}

enum AppError {
    Sim(eqsim::Error),
    Io(io::Error),
}

impl AppError {
    fn exit_code(&self) -> u8 {
        match self {
            AppError::Sim(eqsim::Error::InvalidInput(_)) => EXIT_USAGE,
            AppError::Sim(_) => EXIT_NUMERIC,
            AppError::Io(_) => EXIT_IO,
        }
    }
}

impl std::fmt::Display for AppError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AppError::Sim(e) => write!(f, "{e}"),
            AppError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<eqsim::Error> for AppError {
    fn from(e: eqsim::Error) -> Self {
        AppError::Sim(e)
    }
}

impl From<io::Error> for AppError {
    fn from(e: io::Error) -> Self {
        AppError::Io(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Eigen(args) => cmd_eigen(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<(), AppError> {
    let mut config = ExperimentConfig::new(args.channel, args.algo);
    config.n_symbols = args.symbols;
    config.seed = args.seed;
    config.noise_variance = args.noise_var;
    config.train_delay = args.train_delay;
    config.smoothing_window = args.window;
    if let Some(eq_len) = args.eq_len {
        config.eq_len = eq_len;
    }
    if let Some(step) = args.step {
        config.step = step;
    }
    config.validate()?;

    let record = run_experiment(&config)?;
    let metrics = convergence_metrics(&record)?;

    // Render everything before touching the filesystem, so a failed run
    // leaves no files behind.
    let files = [
        (suffixed(&args.out, "_curve.csv"), curve_csv(&record)),
        (suffixed(&args.out, "_const_tx.csv"), constellation_csv(&record.transmitted)),
        (suffixed(&args.out, "_const_rx.csv"), constellation_csv(&record.received)),
        (suffixed(&args.out, "_const_eq.csv"), constellation_csv(&record.equalized)),
        (suffixed(&args.out, "_weights.csv"), weights_csv(&record)),
    ];
    for (path, contents) in &files {
        write_atomic(path, contents)?;
    }

    println!("steady_state_db={}", metrics.steady_state_db);
    println!("conv_iteration={}", metrics.conv_iteration);
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> Result<(), AppError> {
    let mut config = CompareConfig::new(args.channel);
    config.n_symbols = args.symbols;
    config.seed = args.seed;
    config.noise_variance = args.noise_var;
    config.train_delay = args.train_delay;
    config.smoothing_window = args.window;
    // Validate the shared flags once up front, against the trained row's
    // configuration; the per-row configs differ only in family constants.
    config.experiment(Algorithm::Lms).validate()?;

    let table = compare_algorithms(&config)?;
    write_atomic(&suffixed(&args.out, "_table.csv"), &table_csv(&table))?;
    print!("{}", render_table(&table));
    Ok(())
}

fn cmd_eigen(args: EigenArgs) -> Result<(), AppError> {
    let (_, received) = generate_signals(args.channel, args.symbols, args.seed, 0.0)?;
    let spread = eigen_spread_2(&received)?;
    println!("lambda_max={}", spread.lambda_max);
    println!("lambda_min={}", spread.lambda_min);
    println!("ratio={}", spread.ratio);
    Ok(())
}

/// `prefix` with `suffix` appended to its final component.
fn suffixed(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.as_os_str().to_os_string();
    name.push(suffix);
    PathBuf::from(name)
}

/// Writes via a temporary sibling plus rename, so the target is either the
/// complete new contents or absent.
fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let mut tmp_name = path.as_os_str().to_os_string();
    tmp_name.push(".tmp");
    let tmp = PathBuf::from(tmp_name);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

/// Full-precision real formatting: 17 significant digits round-trip f64
/// exactly.
fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn curve_csv(record: &RunRecord) -> String {
    let mut out = String::new();
    match &record.align {
        Some(align) => {
            out.push_str("iteration,err_sq,err_db_smoothed,aligned_err_sq\n");
            for n in 0..record.err_sq.len() {
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    n,
                    fmt_real(record.err_sq[n]),
                    fmt_real(record.err_db_smoothed[n]),
                    fmt_real(align.aligned_err_sq[n]),
                );
            }
        }
        None => {
            out.push_str("iteration,err_sq,err_db_smoothed\n");
            for n in 0..record.err_sq.len() {
                let _ = writeln!(
                    out,
                    "{},{},{}",
                    n,
                    fmt_real(record.err_sq[n]),
                    fmt_real(record.err_db_smoothed[n]),
                );
            }
        }
    }
    out
}

fn constellation_csv(points: &[eqsim::Complex64]) -> String {
    let mut out = String::from("index,re,im\n");
    for (n, p) in points.iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", n, fmt_real(p.re), fmt_real(p.im));
    }
    out
}

fn weights_csv(record: &RunRecord) -> String {
    let mut out = String::from("tap_index,re,im\n");
    for (k, w) in record.final_weights.iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", k, fmt_real(w.re), fmt_real(w.im));
    }
    out
}

fn table_csv(table: &ComparisonTable) -> String {
    let mut out = String::from("algorithm,steady_state_db,conv_iteration,diverged\n");
    for row in &table.rows {
        let steady = row.steady_state_db.map(fmt_real).unwrap_or_default();
        let conv = row
            .conv_iteration
            .map(|v| v.to_string())
            .unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{}", row.algorithm, steady, conv, row.diverged);
    }
    out
}

fn render_table(table: &ComparisonTable) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<10} {:>15} {:>14} {:>9}",
        "algorithm", "steady_state_db", "conv_iteration", "diverged"
    );
    for row in &table.rows {
        let steady = row
            .steady_state_db
            .map(|v| format!("{v:.3}"))
            .unwrap_or_else(|| "-".into());
        let conv = row
            .conv_iteration
            .map(|v| v.to_string())
            .unwrap_or_else(|| "-".into());
        let diverged = if row.diverged { "yes" } else { "no" };
        let _ = writeln!(
            out,
            "{:<10} {:>15} {:>14} {:>9}",
            row.algorithm.name(),
            steady,
            conv,
            diverged
        );
    }
    out
}
