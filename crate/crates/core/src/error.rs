use thiserror::Error;

/// Broad failure classes, mapped onto CLI exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed input, schema or structural invariant violations.
    Validation,
    /// An analysis could not complete (state cap, vanishing cycle, singular system).
    Analysis,
    /// A verification or assertion did not hold.
    Verification,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Validation => 2,
            ErrorKind::Analysis => 3,
            ErrorKind::Verification => 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum QpnError {
    #[error("multisets are over different element universes")]
    UniverseMismatch,
    #[error("multiplicity overflow for element `{0}`")]
    Overflow(String),
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("cannot parse monomial `{text}`: {reason}")]
    Monomial { text: String, reason: String },
    #[error("lifted function is undefined on `{0}`")]
    MissingImage(String),

    #[error("invalid net: {0}")]
    InvalidNet(String),
    #[error("transition `{transition}` is not enabled: {reason}")]
    NotEnabled { transition: String, reason: String },
    #[error("state cap of {cap} markings exceeded; the net may be unbounded")]
    StateCapExceeded { cap: usize },
    #[error("concurrence enumeration needs an explicit cardinality cap: transition `{0}` has an empty preset")]
    UnboundedConcurrence(String),
    #[error("bijection error: {0}")]
    Bijection(String),

    #[error("invalid rate function: {0}")]
    InvalidRate(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("zero vector cannot be normalised")]
    ZeroVector,
    #[error("zero-probability outcome: {0}")]
    ZeroProbability(String),
    #[error("markings do not factor over the requested bipartition")]
    NotFactoring,
    #[error("net is not reversible: {0}")]
    NotReversible(String),

    #[error("composition precondition violated: {0}")]
    Composition(String),

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("vanishing markings form a cycle through `{0}`")]
    VanishingCycle(String),
    #[error("linear system is singular: {0}")]
    Singular(String),

    #[error("parse error at {line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("non-finite amplitude value")]
    NonFinite,

    #[error("verification failed: {0}")]
    Verification(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl QpnError {
    pub fn kind(&self) -> ErrorKind {
        use QpnError::*;
        match self {
            StateCapExceeded { .. }
            | UnboundedConcurrence(_)
            | VanishingCycle(_)
            | Singular(_)
            | NotEnabled { .. }
            | ZeroVector
            | ZeroProbability(_) => ErrorKind::Analysis,
            Verification(_) => ErrorKind::Verification,
            _ => ErrorKind::Validation,
        }
    }

    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        QpnError::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = QpnError> = std::result::Result<T, E>;
