use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate paper id `{id}` (line {line})")]
    DuplicatePaper { id: String, line: usize },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("unknown venue `{0}`")]
    UnknownVenue(String),

    #[error("venue `{venue}` is ineligible: {reason} (years with data: {coverage})")]
    Ineligible {
        venue: String,
        reason: String,
        coverage: String,
    },

    #[error("entropy undefined: no positive counts")]
    NoMass,

    #[error("delta series for {quantity} of `{venue}` needs at least two consecutive present years")]
    ShortSeries { venue: String, quantity: String },

    #[error("cannot aggregate an empty delta series")]
    EmptyDeltas,

    #[error("node `{0}` is not in the graph")]
    UnknownNode(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid dataset: {0}")]
    Dataset(String),

    #[error("SMO did not converge after {iterations} iterations (gap {gap:.3e}, tol {tol:.1e})")]
    NotConverged { iterations: usize, gap: f64, tol: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("statistics: {0}")]
    Stats(String),

    #[error("impact factor undefined for `{venue}` in {year}: no papers in the two previous years")]
    UndefinedImpactFactor { venue: String, year: i32 },

    #[error("model file: {0}")]
    Model(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable code, used by the CLI error line.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "E_IO",
            Error::Parse { .. } => "E_PARSE",
            Error::DuplicatePaper { .. } => "E_DUPLICATE",
            Error::EmptyCorpus => "E_EMPTY",
            Error::UnknownVenue(_) => "E_UNKNOWN_VENUE",
            Error::Ineligible { .. } => "E_INELIGIBLE",
            Error::NoMass => "E_NO_MASS",
            Error::ShortSeries { .. } => "E_SHORT_SERIES",
            Error::EmptyDeltas => "E_EMPTY_DELTAS",
            Error::UnknownNode(_) => "E_UNKNOWN_NODE",
            Error::Dimension { .. } => "E_DIMENSION",
            Error::Dataset(_) => "E_DATASET",
            Error::NotConverged { .. } => "E_NOT_CONVERGED",
            Error::Config(_) => "E_CONFIG",
            Error::Stats(_) => "E_STATS",
            Error::UndefinedImpactFactor { .. } => "E_UNDEFINED_IF",
            Error::Model(_) => "E_MODEL",
            Error::Csv(_) => "E_CSV",
            Error::Json(_) => "E_JSON",
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
