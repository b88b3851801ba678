use thiserror::Error;

/// Errors raised while building, parsing or transforming automata and timed strings.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid number `{text}`")]
    InvalidScalar { text: String },

    #[error("negative value `{value}` where a nonnegative one is required")]
    Negative { value: String },

    #[error("timestamps must strictly increase: position {position} has {current} after {previous}")]
    NonIncreasingTimestamp {
        position: usize,
        previous: String,
        current: String,
    },

    #[error("symbol `{symbol}` is declared in more than one alphabet class")]
    AlphabetOverlap { symbol: String },

    #[error("alphabet is empty")]
    EmptyAlphabet,

    #[error("symbol `{symbol}` is not in the alphabet")]
    UnknownSymbol { symbol: String },

    #[error("symbol `{symbol}` has a different kind in the automaton alphabet")]
    SymbolKindMismatch { symbol: String },

    #[error("position {position} out of range for a string of length {len}")]
    PositionOutOfRange { position: usize, len: usize },

    #[error("{line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("atom `{atom}` is not in the assignment universe")]
    AtomOutsideUniverse { atom: String },

    #[error("too many atomic constraints: {count} (limit {limit})")]
    TooManyAtoms { count: usize, limit: usize },

    #[error("unknown state `{name}`")]
    UnknownState { name: String },

    #[error("unknown stack symbol `{name}`")]
    UnknownStackSymbol { name: String },

    #[error("duplicate {what} `{name}`")]
    Duplicate { what: &'static str, name: String },

    #[error("automaton has no initial state")]
    NoInitialState,

    #[error("transition {index}: {message}")]
    InvalidTransition { index: usize, message: String },

    #[error("transition {index} has a non-trivial guard; untimed determinization needs `true` guards")]
    GuardNotTrue { index: usize },

    #[error("invalid witness parameters: {0}")]
    WitnessSpec(String),

    #[error("timing scheme cannot be realized: {0}")]
    TimingScheme(String),

    #[error("distinguishing suffix precondition violated: {0}")]
    Distinguish(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
