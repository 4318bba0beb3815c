//! `tcoint`: threshold cointegration analysis from the command line.
//!
//! `analyze` runs the four-stage pipeline (unit roots, Engle-Granger,
//! the Sup-LM threshold test, and the two-regime error-correction fit) on a
//! CSV panel. `simulate` writes a synthetic panel from a DGP spec file.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tcoint_core::linctr::Direction;
use tcoint_core::pipeline::{run_pipeline, LagMode, OutputFormat, PipelineConfig};
use tcoint_core::series::load_panel_with_date;
use tcoint_core::simulate::{simulate_tvecm, DgpSpec};
use tcoint_core::suplm::{BootstrapScheme, TestGrid};
use tcoint_core::unitroot::Deterministic;
use tcoint_core::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "tcoint",
    version,
    about = "Two-regime threshold cointegration testing and estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full analysis on a CSV panel of two price series.
    Analyze(AnalyzeArgs),
    /// Simulate a two-regime error-correction panel and write it as CSV.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    /// CSV file with a date column and numeric price columns.
    #[arg(long)]
    input: PathBuf,

    /// Column holding the benchmark series.
    #[arg(long)]
    benchmark: String,

    /// Column holding the target series.
    #[arg(long)]
    target: String,

    /// Name of the date column.
    #[arg(long, default_value = "date")]
    date_column: String,

    /// Lag order for difference terms: 'auto' (BIC search) or a fixed count.
    #[arg(long, default_value = "auto")]
    lags: LagMode,

    /// Grid points for the threshold (and slope) search.
    #[arg(long, default_value_t = 300)]
    grid_points: usize,

    /// Minimum fraction of observations per regime.
    #[arg(long, default_value_t = 0.05)]
    trim: f64,

    /// Slope search half-width, in first-step standard errors.
    #[arg(long, default_value_t = 6.0)]
    beta_radius: f64,

    /// Bootstrap replications for the threshold test p-value.
    #[arg(long, default_value_t = 5000)]
    replications: usize,

    /// Random seed driving the bootstrap.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Analyze natural logarithms of the series.
    #[arg(long)]
    log: bool,

    /// Quick profile: 50 grid points and 200 replications.
    #[arg(long)]
    fast: bool,

    /// Report format.
    #[arg(long, default_value = "text")]
    format: OutputFormat,

    /// Include a linear trend in level unit-root tests and the static
    /// cointegrating regression.
    #[arg(long)]
    trend: bool,

    /// Direction of the static first-step regression.
    #[arg(long, default_value = "target-on-benchmark")]
    eg_direction: Direction,

    /// Hold the slope at the first-step estimate during the grid search.
    #[arg(long)]
    fix_beta: bool,

    /// Search the test statistic over slope and threshold jointly.
    #[arg(long)]
    joint_test_grid: bool,

    /// Bootstrap scheme: 'parametric-gaussian' or 'residual-resample'.
    #[arg(long, default_value = "parametric-gaussian")]
    scheme: BootstrapScheme,

    /// Fit the threshold model even when the test does not reject.
    #[arg(long)]
    force_fit: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON file describing the data-generating process.
    #[arg(long)]
    spec: PathBuf,

    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,

    /// Random seed; overrides the seed in the spec file when given.
    #[arg(long)]
    seed: Option<u64>,
}

fn exit_for(err: &Error) -> u8 {
    match err {
        Error::InvalidInput(_) => EXIT_USAGE,
        Error::Data(_) | Error::Io(_) | Error::Csv(_) => EXIT_DATA,
        Error::Numerical(_) => EXIT_NUMERICAL,
    }
}

fn analyze(args: AnalyzeArgs) -> ExitCode {
    let (grid_points, replications) = if args.fast {
        (50, 200)
    } else {
        (args.grid_points, args.replications)
    };
    let cfg = PipelineConfig {
        input: Some(args.input.display().to_string()),
        benchmark: args.benchmark.clone(),
        target: args.target.clone(),
        date_column: args.date_column.clone(),
        deterministic: if args.trend {
            Deterministic::ConstantTrend
        } else {
            Deterministic::Constant
        },
        lags: args.lags,
        grid_points,
        trim: args.trim,
        beta_radius: args.beta_radius,
        fix_beta: args.fix_beta,
        replications,
        seed: args.seed,
        log_transform: args.log,
        output_format: args.format,
        scheme: args.scheme,
        test_grid: if args.joint_test_grid {
            TestGrid::Joint
        } else {
            TestGrid::TauOnly
        },
        direction: args.eg_direction,
        fit_threshold: 0.10,
        force_fit: args.force_fit,
    };

    let panel = match load_panel_with_date(
        &args.input,
        &args.date_column,
        &args.benchmark,
        &args.target,
    ) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_for(&e));
        }
    };

    match run_pipeline(&panel, &cfg) {
        Ok(report) => {
            match cfg.output_format {
                OutputFormat::Text => print!("{}", report.to_text()),
                OutputFormat::Json => print!("{}", report.to_json()),
            }
            ExitCode::SUCCESS
        }
        Err(boxed) => {
            // Emit what was computed before the failing stage, then the error.
            match cfg.output_format {
                OutputFormat::Text => print!("{}", boxed.partial.to_text()),
                OutputFormat::Json => print!("{}", boxed.partial.to_json()),
            }
            eprintln!("error: {boxed}");
            ExitCode::from(exit_for(&boxed.source))
        }
    }
}

fn simulate(args: SimulateArgs) -> ExitCode {
    let raw = match fs::read_to_string(&args.spec) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: cannot read spec file: {e}");
            return ExitCode::from(EXIT_DATA);
        }
    };
    let mut spec: DgpSpec = match serde_json::from_str(&raw) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: malformed spec file: {e}");
            return ExitCode::from(EXIT_DATA);
        }
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let panel = match simulate_tvecm(&spec) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_for(&e));
        }
    };
    if let Err(e) = panel.to_csv(&args.out) {
        eprintln!("error: {e}");
        return ExitCode::from(exit_for(&e));
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // Help and version displays are successes; everything else is a
            // usage error.
            let failed = e.use_stderr();
            let _ = e.print();
            return if failed {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match cli.command {
        Command::Analyze(args) => analyze(args),
        Command::Simulate(args) => simulate(args),
    }
}
