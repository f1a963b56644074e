use std::fmt;
use std::path::PathBuf;

/// One violated rule found while validating a record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, rule: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            rule: rule.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

fn join(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("version {0:?} has no leading numeric component")]
    NoNumericComponent(String),

    #[error("invalid arguments: {0}")]
    InvalidArgs(String),

    #[error("schema violation: {}", join(.0))]
    SchemaViolation(Vec<Violation>),

    #[error("mask sentinel mismatch: {}", join(.0))]
    MaskSentinelMismatch(Vec<Violation>),

    #[error("reference code is not syntactically valid")]
    InvalidReference,

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("versions out of order: {prev} is not older than {curr}")]
    VersionOrder { prev: String, curr: String },

    #[error("surfaces are not strictly ascending by version at position {0}")]
    UnsortedVersions(usize),

    #[error("mask target cannot be resolved: {0}")]
    SpanUnresolvable(String),

    #[error("source already contains the mask sentinel {0}")]
    SentinelCollision(String),

    #[error("pairing violation: {0}")]
    PairingViolation(String),

    #[error("generation is empty after normalization")]
    EmptyAfterNormalization,

    #[error("join failure, orphan instance ids: {}", .0.join(", "))]
    JoinFailure(Vec<String>),

    #[error("pass requested but exec reports are missing: {0}")]
    MissingExecReports(String),

    #[error("k = {k} exceeds the {n} samples of instance {instance_id}")]
    KExceedsN { instance_id: String, k: usize, n: usize },

    #[error("refusing to emit an empty report")]
    EmptyReport,

    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end:
    /// 1 schema/join failure, 2 I/O failure, 3 invalid arguments.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 2,
            Error::InvalidArgs(_) | Error::KExceedsN { .. } | Error::EmptyReport => 3,
            _ => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
