use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed record: {0}")]
    MalformedRecord(String),
    #[error("duplicate feature `{0}`")]
    DuplicateFeature(String),
    #[error("solution has no steps")]
    EmptySolution,
    #[error("case problem has no features")]
    EmptyProblem,
    #[error("{what} = {value} is out of range")]
    OutOfRange { what: String, value: f64 },

    #[error("vector dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("case id `{0}` already present")]
    DuplicateId(String),
    #[error("unknown case id `{0}`")]
    UnknownCase(String),

    #[error("no query feature carries positive weight")]
    NoWeightedFeatures,
    #[error("retrieval returned no cases")]
    NothingRetrieved,

    #[error("transform deleted every step")]
    EmptyAfterTransform,
    #[error("{plans} plans but {weights} weights")]
    ArityMismatch { plans: usize, weights: usize },
    #[error("no template rule applies to the query")]
    NoApplicableTemplate,
    #[error("external generator mode requires a caller-supplied generator")]
    ExternalGeneratorUnavailable,

    #[error("case base is empty")]
    EmptyCaseBase,
    #[error("goal stack is full (max depth {0})")]
    StackOverflow(usize),
    #[error("preconditions of `{action}` not satisfied: missing {missing}")]
    PreconditionViolated { action: String, missing: String },
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("environment halted at tick {0}")]
    EnvironmentHalted(u64),

    #[error("empty input")]
    EmptyInput,
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("embedder digest mismatch: library has {found}, config has {expected}")]
    DigestMismatch { expected: String, found: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn malformed(msg: impl Into<String>) -> Self {
        Error::MalformedRecord(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    pub(crate) fn at_line(self, line: usize) -> Self {
        match self {
            e @ Error::Parse { .. } => e,
            e => Error::Parse { line, reason: e.to_string() },
        }
    }
}
