//! `pcorder` command line: compute score documents, order axes, or run the
//! HTTP service.
//!
//! Exit codes: 0 on success, 1 on usage errors (bad flags, weights, window
//! or mode), 2 on data errors (unreadable or unusable input, write failures).

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use pcorder_core::data::load_csv;
use pcorder_core::ordering::{OrderingMode, MAX_EXACT_DIMS};
use pcorder_core::report::{OrderReport, ResultDocument};
use pcorder_core::{
    Analysis, AnalysisConfig, DataError, Execution, OrderingError, ScoringError, Weights,
    WindowSpec,
};
use pcorder_service::state::{DEFAULT_CACHE_BYTES, DEFAULT_MAX_SYNC_WORK, DEFAULT_PORT};
use pcorder_service::ServiceConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "pcorder",
    version,
    about = "Axis ordering for parallel coordinates"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the score matrix and every pair profile as JSON.
    Compute(AnalysisArgs),
    /// Compute an axis order; prints one axis name per line.
    Order {
        #[command(flatten)]
        analysis: AnalysisArgs,
        /// tsp (exact, greedy above 15 axes) or greedy.
        #[arg(long, default_value = "tsp")]
        mode: String,
    },
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct AnalysisArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub input: PathBuf,
    /// Window width as a fraction of the normalized axis range.
    #[arg(long, default_value_t = 0.25)]
    pub window: f64,
    /// Window step; half the window when omitted.
    #[arg(long)]
    pub stride: Option<f64>,
    /// Property weights, e.g. `pos_corr=1,fan=0.5`. Unnamed properties get 0.
    #[arg(long)]
    pub weights: String,
    /// Seed for the skewness permutation test.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = pcorder_core::scoring::DEFAULT_PERMUTATIONS)]
    pub permutations: usize,
    /// Comma-separated columns to use; all numeric columns by default.
    #[arg(long, value_delimiter = ',')]
    pub columns: Option<Vec<String>>,
    /// Where to write the JSON document (stdout for `compute` when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "PORT", default_value_t = DEFAULT_PORT)]
    pub port: u16,
    #[arg(long, env = "MAX_SYNC_WORK", default_value_t = DEFAULT_MAX_SYNC_WORK)]
    pub max_sync_work: u64,
    #[arg(long, env = "CACHE_BYTES", default_value_t = DEFAULT_CACHE_BYTES)]
    pub cache_bytes: usize,
    /// Directory of static frontend assets served at `/`.
    #[arg(long, env = "STATIC_DIR")]
    pub static_dir: Option<PathBuf>,
    #[arg(long, env = "CORS_ORIGIN")]
    pub cors_origin: Option<String>,
}

/// An error with its stable code and exit status.
#[derive(Debug)]
pub struct CliError {
    pub code: String,
    pub message: String,
    pub exit: i32,
}

impl CliError {
    fn usage(code: &str, message: impl ToString) -> Self {
        Self {
            code: code.into(),
            message: message.to_string(),
            exit: EXIT_USAGE,
        }
    }

    fn data(code: &str, message: impl ToString) -> Self {
        Self {
            code: code.into(),
            message: message.to_string(),
            exit: EXIT_DATA,
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        Self::data(e.code(), e)
    }
}

impl From<ScoringError> for CliError {
    fn from(e: ScoringError) -> Self {
        match e {
            ScoringError::TooFewAxes(_) | ScoringError::InvalidPair(..) => Self::data(e.code(), e),
            _ => Self::usage(e.code(), e),
        }
    }
}

impl From<OrderingError> for CliError {
    fn from(e: OrderingError) -> Self {
        match e {
            OrderingError::UnknownMode(_) => Self::usage(e.code(), e),
            OrderingError::EmptyMatrix => Self::data(e.code(), e),
        }
    }
}

impl AnalysisArgs {
    pub fn config(&self) -> Result<AnalysisConfig, CliError> {
        let spec = match self.stride {
            Some(s) => WindowSpec::new(self.window, s),
            None => WindowSpec::with_window(self.window),
        }
        .map_err(ScoringError::from)?;
        let config = AnalysisConfig::new(spec, self.seed).with_permutations(self.permutations);
        config.validate()?;
        Ok(config)
    }

    pub fn parsed_weights(&self) -> Result<Weights, CliError> {
        let w: Weights = self.weights.parse()?;
        w.require_active()?;
        Ok(w)
    }
}

struct Prepared {
    analysis: Analysis,
    weights: Weights,
    dropped_rows: usize,
}

fn prepare(args: &AnalysisArgs) -> Result<Prepared, CliError> {
    // validate flags before touching the file so usage errors win
    let config = args.config()?;
    let weights = args.parsed_weights()?;
    let report = load_csv(&args.input, args.columns.as_deref())?;
    let analysis = Analysis::compute(&report.dataset, &config, Execution::default())?;
    Ok(Prepared {
        analysis,
        weights,
        dropped_rows: report.dropped_rows,
    })
}

fn write_document(
    doc: &ResultDocument,
    out: Option<&PathBuf>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    doc.check_ranges()
        .map_err(|m| CliError::data("out_of_range", m))?;
    let mut text =
        serde_json::to_string_pretty(doc).map_err(|e| CliError::data("serialization", e))?;
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::data("io_error", format!("{}: {e}", path.display()))),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::data("io_error", e)),
    }
}

fn compute(args: &AnalysisArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let p = prepare(args)?;
    let doc = ResultDocument::build(&p.analysis, &p.weights, p.dropped_rows)?;
    write_document(&doc, args.out.as_ref(), stdout)
}

fn order(
    args: &AnalysisArgs,
    mode: &str,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let mode: OrderingMode = mode.parse()?;
    let p = prepare(args)?;
    let dims = p.analysis.size();
    if mode == OrderingMode::Tsp && dims > MAX_EXACT_DIMS {
        let _ = writeln!(
            stderr,
            "warning: {dims} axes exceed the exact-search limit of {MAX_EXACT_DIMS}; using greedy ordering"
        );
    }
    let report = OrderReport::build(&p.analysis, &p.weights, mode, Execution::default()).map_err(
        |e| match e {
            pcorder_core::report::OrderReportError::Scoring(s) => CliError::from(s),
            pcorder_core::report::OrderReportError::Ordering(o) => CliError::from(o),
        },
    )?;
    if args.out.is_some() {
        let doc =
            ResultDocument::build(&p.analysis, &p.weights, p.dropped_rows)?.with_ordering(&report);
        write_document(&doc, args.out.as_ref(), stdout)?;
    }
    let names = p.analysis.dims();
    for &k in &report.ordering.order {
        writeln!(stdout, "{}", names[k]).map_err(|e| CliError::data("io_error", e))?;
    }
    Ok(())
}

fn serve(args: &ServeArgs) -> Result<(), CliError> {
    let config = ServiceConfig {
        port: args.port,
        max_sync_work: args.max_sync_work,
        cache_bytes: args.cache_bytes,
        static_dir: args.static_dir.clone(),
        cors_origin: args.cors_origin.clone(),
    };
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::data("io_error", e))?;
    rt.block_on(pcorder_service::serve(config))
        .map_err(|e| CliError::data("io_error", e))
}

/// Runs the CLI on `argv` (including the program name) and returns the exit
/// code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Compute(args) => compute(args, stdout),
        Command::Order { analysis, mode } => order(analysis, mode, stdout, stderr),
        Command::Serve(args) => serve(args),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error[{}]: {}", e.code, e.message);
            e.exit
        }
    }
}
