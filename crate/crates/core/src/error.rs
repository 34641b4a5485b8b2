use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point lies behind the camera (depth {depth})")]
    BehindCamera { depth: f64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// Text formats report a 1-based line, binary formats a byte offset.
    #[error("parse error at {location}: {message}")]
    Parse { location: Location, message: String },

    #[error("no scorable edge points")]
    NoPoints,

    #[error("could not place {placed_of} objects without overlap after {attempts} attempts")]
    SceneTooCrowded { placed_of: usize, attempts: usize },

    #[error("cache mismatch: {0}")]
    CacheMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Line(usize),
    Offset(usize),
}

impl std::fmt::Display for Location {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Location::Line(l) => write!(f, "line {l}"),
            Location::Offset(o) => write!(f, "byte offset {o}"),
        }
    }
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn parse_line(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            location: Location::Line(line),
            message: msg.into(),
        }
    }

    pub(crate) fn parse_offset(offset: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            location: Location::Offset(offset),
            message: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
