use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("`{name}` at offset {offset} expects {expected} argument(s), got {found}")]
    Arity {
        name: String,
        offset: usize,
        expected: usize,
        found: usize,
    },

    #[error("no binding for variable `{0}`")]
    MissingBinding(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{path}: {message}")]
    Schema { path: String, message: String },

    #[error("{path}: {message}")]
    Invariant { path: String, message: String },

    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("ordinary control required when the drift field takes part")]
    MissingOrdinaryControl,

    #[error("non-finite state during flow integration")]
    NonFinite,

    #[error("trajectory norm exceeded {0:e}")]
    Blowup(f64),

    #[error("flow-box violation: residual {0:e}")]
    FlowBox(f64),

    #[error("singular Jacobian (condition number {0:e})")]
    SingularJacobian(f64),

    #[error("terminal costate mismatch |p(T) - grad gamma| = {0:e}")]
    TerminalMismatch(f64),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("variation not admissible at t = {t}: {message}")]
    Admissibility { t: f64, message: String },

    #[error("transport undefined: {0}")]
    TransportUndefined(String),

    #[error("time {t} outside horizon [0, {horizon}]")]
    OutsideHorizon { t: f64, horizon: f64 },

    #[error("step {step} invalid for horizon {horizon}")]
    InvalidStep { step: f64, horizon: f64 },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn invariant(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invariant {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True for errors caused by malformed input rather than by a failed check.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Stage { source, .. } => source.is_input_error(),
            Error::Syntax { .. }
            | Error::UnknownIdentifier { .. }
            | Error::Arity { .. }
            | Error::Schema { .. }
            | Error::Invariant { .. }
            | Error::IndexOutOfRange { .. }
            | Error::Dimension(_)
            | Error::OutsideHorizon { .. }
            | Error::InvalidStep { .. }
            | Error::Admissibility { .. }
            | Error::GridMismatch(_)
            | Error::Io(_) => true,
            _ => false,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
