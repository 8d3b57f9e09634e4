use chrono::NaiveDate;
use thiserror::Error;

/// Errors raised by the engine. Every variant maps to a short stable code
/// that the command-line front end reports verbatim.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid party registry: {0}")]
    Registry(String),
    #[error("unknown party `{0}`")]
    UnknownParty(String),
    #[error("invalid event: {0}")]
    BadEvent(String),
    #[error("no polls in the {window_days}-day window ending {as_of}")]
    NoPolls { as_of: NaiveDate, window_days: u32 },
    #[error("none of the requested dates has polls in its window")]
    NoData,
    #[error("prior concentration must be positive for every party: {0}")]
    BadPrior(String),
    #[error("requested zero draws")]
    EmptyRequest,
    #[error("{requested} draws requested, at least {minimum} are needed")]
    InsufficientDraws { requested: usize, minimum: usize },
    #[error("as-of date {as_of} lies after the election date {election_date}")]
    PastElection { as_of: NaiveDate, election_date: NaiveDate },
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Registry(_) => "bad-registry",
            Error::UnknownParty(_) => "unknown-party",
            Error::BadEvent(_) => "bad-event",
            Error::NoPolls { .. } => "no-polls",
            Error::NoData => "no-data",
            Error::BadPrior(_) => "bad-prior",
            Error::EmptyRequest => "empty-request",
            Error::InsufficientDraws { .. } => "insufficient-draws",
            Error::PastElection { .. } => "past-election",
            Error::Parameter(_) => "bad-parameter",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
