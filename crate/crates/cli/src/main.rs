mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use venuetier::features::{DegreeNorm, PnaDenominator};

/// Venue tier analysis from yearly stability features.
#[derive(Debug, Parser)]
#[command(name = "venuetier", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Seed for splits, folds and synthetic generation.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Fail on the first malformed corpus record (default).
    #[arg(long, global = true, overrides_with = "lenient")]
    strict: bool,
    /// Skip malformed corpus records with a warning.
    #[arg(long, global = true, overrides_with = "strict")]
    lenient: bool,
    /// Standardize features before SVM training (default).
    #[arg(long, global = true, overrides_with = "no_standardize")]
    standardize: bool,
    #[arg(long, global = true, overrides_with = "standardize")]
    no_standardize: bool,
    #[arg(long, global = true, default_value = "papers")]
    pub pna_denominator: PnaDenominator,
    #[arg(long, global = true, default_value = "mass")]
    pub ddi_norm: DegreeNorm,
    /// Consecutive years with papers required for a venue to be eligible.
    #[arg(long, global = true, default_value_t = 5)]
    pub min_years: usize,
    /// Keep only papers that cite or are cited by another corpus paper.
    #[arg(long, global = true)]
    pub isolation_filter: bool,
}

impl GlobalArgs {
    pub fn strict(&self) -> bool {
        !self.lenient
    }

    pub fn standardize(&self) -> bool {
        !self.no_standardize
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a corpus and summarize its coverage.
    Ingest(IngestArgs),
    /// Compute yearly quantities, deltas and the 27-feature matrix.
    Features(FeaturesArgs),
    /// Split, grid-search, rank features and train the final model.
    Train(TrainArgs),
    /// Label venues with a trained model.
    Classify(ClassifyArgs),
    /// Group t-tests, feature correlations and PCA factors.
    Analyze(AnalyzeArgs),
    /// Generate a labeled synthetic corpus.
    Synth(SynthArgs),
    /// Plot-ready tables from a run directory.
    Report(ReportArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct IngestArgs {
    pub corpus: PathBuf,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct FeaturesArgs {
    pub corpus: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Inclusive analysis window, e.g. 2000:2011.
    #[arg(long, value_parser = parse_window)]
    pub window: Option<(i32, i32)>,
    /// Comma-separated venue ids; all venues when omitted.
    #[arg(long, value_delimiter = ',')]
    pub venues: Vec<String>,
    /// Also export the global co-authorship graph of this year as a TSV edge list.
    #[arg(long)]
    pub graph_year: Option<i32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GridData {
    Validation,
    Train,
    All,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    pub features: PathBuf,
    pub labels: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Fraction of labeled venues held out for validation.
    #[arg(long, default_value_t = 20.0 / 53.0)]
    pub validation_fraction: f64,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    /// Rows used for the cross-validated grid search.
    #[arg(long, value_enum, default_value_t = GridData::Validation)]
    pub grid_on: GridData,
    /// Gamma grid as decade exponents LO:HI.
    #[arg(long, value_parser = parse_window, default_value = "-9:1", allow_hyphen_values = true)]
    pub gamma_decades: (i32, i32),
    /// C grid as decade exponents LO:HI.
    #[arg(long, value_parser = parse_window, default_value = "-2:8", allow_hyphen_values = true)]
    pub c_decades: (i32, i32),
    /// |r| above which a later-ranked feature is dropped as redundant.
    #[arg(long, default_value_t = 0.9)]
    pub corr_threshold: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    #[arg(long, default_value_t = 10)]
    pub max_passes: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct ClassifyArgs {
    pub model: PathBuf,
    pub features: PathBuf,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Nearest labeled training venues to list per row.
    #[arg(long, default_value_t = 3)]
    pub neighbors: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct AnalyzeArgs {
    pub features: PathBuf,
    pub labels: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 11)]
    pub pca_factors: usize,
    #[arg(long, default_value_t = 5)]
    pub top_loadings: usize,
    #[arg(long, default_value_t = venuetier::stats::DEFAULT_VARIANCE_CUT)]
    pub variance_cut: f64,
    /// |r| above which a feature pair is listed as strongly correlated.
    #[arg(long, default_value_t = 0.9)]
    pub corr_threshold: f64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    /// JSON generator configuration; built-in defaults when omitted.
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    /// Directory holding the outputs of `features` (and optionally `train`).
    pub run_dir: PathBuf,
    /// Labels CSV; defaults to `<run_dir>/labels.csv`.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Defaults to `<run_dir>/report`.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Year-count thresholds for the raw-trend table.
    #[arg(long, value_delimiter = ',', default_value = "6,8,10")]
    pub trend_years: Vec<usize>,
}

fn parse_window(s: &str) -> Result<(i32, i32), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected LO:HI, got `{s}`"))?;
    let lo = a.trim().parse::<i32>().map_err(|e| format!("`{a}`: {e}"))?;
    let hi = b.trim().parse::<i32>().map_err(|e| format!("`{b}`: {e}"))?;
    if lo > hi {
        return Err(format!("empty range {lo}:{hi}"));
    }
    Ok((lo, hi))
}

fn error_code(err: &anyhow::Error) -> &'static str {
    err.chain()
        .find_map(|e| e.downcast_ref::<venuetier::Error>())
        .map_or("E_USAGE", venuetier::Error::code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let g = &cli.global;
    let result = match &cli.command {
        Command::Ingest(a) => commands::ingest(g, a),
        Command::Features(a) => commands::features(g, a),
        Command::Train(a) => commands::train(g, a),
        Command::Classify(a) => commands::classify(g, a),
        Command::Analyze(a) => commands::analyze(g, a),
        Command::Synth(a) => commands::synth(g, a),
        Command::Report(a) => commands::report(g, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error[{}]: {msg}", error_code(&e));
            ExitCode::FAILURE
        }
    }
}
