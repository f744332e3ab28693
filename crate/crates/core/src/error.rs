use thiserror::Error;

/// Errors produced by the spectral machinery, the solvers and the harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: expected {expected} values, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("axis {axis} out of range for dimension {dim}")]
    Axis { axis: usize, dim: usize },

    /// `2 w <xi>` exceeded the exponent guard at a populated mode.
    #[error("analytic weight overflow: 2*w*<xi> = {exponent:.3} exceeds {limit} (shrink w0 or the lattice)")]
    Range { exponent: f64, limit: f64 },

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("field is not real-valued (conjugate asymmetry {0:.3e})")]
    NotReal(f64),

    #[error("frequency {0:?} is outside the tabulated lattice")]
    OutsideTable(Vec<f64>),

    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },

    #[error("time {t} is not on the background half-step grid")]
    OffGrid { t: f64 },

    #[error("weight schedule exhausted: t = {t} >= w0/M = {limit}")]
    ScheduleExhausted { t: f64, limit: f64 },

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wraps the error with the name of the sub-run or stage that produced it.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Short machine-readable tag for the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Shape { .. } => "shape",
            Error::GridMismatch => "grid-mismatch",
            Error::InvalidGrid(_) => "invalid-grid",
            Error::Axis { .. } => "axis",
            Error::Range { .. } => "range",
            Error::Param(_) => "param",
            Error::NotReal(_) => "not-real",
            Error::OutsideTable(_) => "outside-table",
            Error::NonFinite { .. } => "non-finite",
            Error::OffGrid { .. } => "off-grid",
            Error::ScheduleExhausted { .. } => "schedule-exhausted",
            Error::Insufficient(_) => "insufficient",
            Error::Snapshot(_) => "snapshot",
            Error::Context { source, .. } => source.kind(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
