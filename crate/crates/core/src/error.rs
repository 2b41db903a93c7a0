use std::path::PathBuf;

use crate::Symbol;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("probability vector is empty")]
    EmptyPmf,
    #[error("negative weight {value} at index {index}")]
    NegativeWeight { index: usize, value: f64 },
    #[error("weights do not sum to one (deviation {0:e})")]
    SumNotOne(f64),
    #[error("alphabet must contain at least one symbol")]
    EmptyAlphabet,
    #[error("symbol {symbol} out of range for alphabet of size {size}")]
    SymbolOutOfRange { symbol: Symbol, size: usize },
    #[error("sequence lengths differ ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty sequence")]
    EmptySequence,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("label {label} not in input alphabet of size {size}")]
    LabelOutOfAlphabet { label: Symbol, size: usize },
    #[error("tree too large: {0} nodes or leaves exceeds the enumeration cap")]
    DepthOverflow(u128),
    #[error("path of length {len} exceeds tree depth {depth}")]
    PathTooLong { len: usize, depth: usize },
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error("the input alphabet has a single symbol, no alternative to `a` exists")]
    SingletonInputAlphabet,
    #[error("enumeration of {0} items exceeds the cap")]
    EnumerationTooLarge(u128),
    #[error("invalid surgery site: {0}")]
    InvalidSite(String),
    #[error("tree is already well-ordered")]
    AlreadyWellOrdered,

    #[error("mu must be positive and finite, got {0}")]
    NonpositiveMu(f64),
    #[error("bound violated: value {value} > bound {bound}")]
    BoundViolated { value: f64, bound: f64 },
    #[error("{what}: need at least {min} trials, got {got}")]
    TooFewTrials { what: &'static str, min: u64, got: u64 },

    #[error("output {y} has zero likelihood under input {x} for every state")]
    ZeroLikelihood { x: Symbol, y: Symbol },
    #[error("input alphabet of size {0} is too large for the frontier search")]
    AlphabetTooLarge(usize),
    #[error("invalid distortion table: {0}")]
    InvalidDistortion(String),
    #[error("invalid code: {0}")]
    InvalidCode(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("{context}: {source}")]
    Instance {
        context: String,
        #[source]
        source: Box<Error>,
    },
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }

    pub(crate) fn in_file(self, path: impl Into<PathBuf>) -> Self {
        Error::File { path: path.into(), source: Box::new(self) }
    }

    pub(crate) fn in_instance(self, context: impl Into<String>) -> Self {
        Error::Instance { context: context.into(), source: Box::new(self) }
    }

    /// The innermost error, with file and instance context peeled off.
    pub fn root(&self) -> &Error {
        match self {
            Error::File { source, .. } | Error::Instance { source, .. } => source.root(),
            e => e,
        }
    }

    /// Whether the error reports a violated bound or invariant rather than
    /// bad input.
    pub fn is_violation(&self) -> bool {
        matches!(self.root(), Error::BoundViolated { .. })
    }
}
