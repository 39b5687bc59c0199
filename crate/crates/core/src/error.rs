use std::fmt;

/// A single failed config check, located by its JSON path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {}", join_violations(.0))]
    InvalidConfig(Vec<Violation>),

    #[error("config parse error at {path}: {message}")]
    ConfigParse { path: String, message: String },

    #[error("degenerate direction")]
    DegenerateDirection,

    #[error("UE coincides with {0}")]
    CoincidentUe(String),

    #[error("no incident power")]
    NoIncidentPower,

    #[error("dark panel")]
    DarkPanel,

    #[error("need at least 16 samples for a quantile CDF, got {0}")]
    TooFewSamples(usize),

    #[error("PLE bin edges must be strictly increasing")]
    NonIncreasingEdges,

    #[error("tensor {name}: expected shape {expected:?}, found {found:?}")]
    ShapeMismatch {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("missing tensor {0}")]
    MissingTensor(String),

    #[error("bad magic")]
    BadMagic,

    #[error("unsupported weights version {0}")]
    UnsupportedVersion(u32),

    #[error("truncated tensor {0}")]
    TruncatedTensor(String),

    #[error("truncated header")]
    TruncatedHeader,

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("expected {expected} input features, got {found}")]
    FeatureCount { expected: usize, found: usize },

    #[error("missing direct-link (category 1) CDF")]
    MissingDirectCdf,

    #[error("invalid CDF category {0} (expected 1..=4)")]
    InvalidCategory(u8),

    #[error("empty store")]
    EmptyStore,

    #[error("fingerprint mismatch: store {store}, scene {scene}")]
    FingerprintMismatch { store: String, scene: String },

    #[error("infeasible cluster size: {n} points cannot fill {k} clusters of at least {min_size}")]
    InfeasibleClusterSize { n: usize, k: usize, min_size: usize },

    #[error("simplex exceeded {0} pivots (numerical cycling guard)")]
    CyclingGuard(usize),

    #[error("LP optimality certificate failed: {0}")]
    Certificate(String),

    #[error("enumeration needs {needed} LP solves, above the guard of {guard}; use a smaller instance")]
    EnumerationGuard { needed: f64, guard: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
