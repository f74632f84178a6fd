use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("asymmetric distance: d({i},{j}) = {dij} but d({j},{i}) = {dji}")]
    Asymmetric { i: usize, j: usize, dij: f64, dji: f64 },

    #[error("zero distance between distinct points {i} and {j}")]
    NotSeparated { i: usize, j: usize },

    #[error("invalid distance d({i},{j}) = {value}")]
    InvalidDistance { i: usize, j: usize, value: f64 },

    #[error("nonpositive weight {weight} at point {index}")]
    NonpositiveWeight { index: usize, weight: f64 },

    #[error("coincident points: vol_pair needs x != y (got {0})")]
    CoincidentPoints(usize),

    #[error("empty space")]
    Empty,

    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),

    #[error("admissibility violated: 12*A0^3*C0*delta = {lhs} > c0 = {c0}")]
    Admissibility { lhs: f64, c0: f64 },

    #[error("covering failed at level {level}: point {point} is {distance} from every center (C0*delta^k = {bound})")]
    CoveringFailed { level: i32, point: usize, distance: f64, bound: f64 },

    #[error("axiom violation: {0}")]
    AxiomViolation(String),

    #[error("degenerate cube at level {level}, index {index}")]
    DegenerateCube { level: i32, index: usize },

    #[error("length mismatch: expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("unknown key: {0}")]
    UnknownKey(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("parse error at {context}: {message}")]
    Parse { context: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse { context: context.into(), message: message.into() }
    }

    /// True for errors caused by malformed input files rather than a space
    /// that fails an axiom.
    pub fn is_io_or_parse(&self) -> bool {
        matches!(self, Error::Io(_) | Error::Parse { .. })
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse {
            context: format!("line {}, column {}", e.line(), e.column()),
            message: e.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
