use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("photon cutoff must be at least 1, got {0}")]
    CutoffTooSmall(usize),

    #[error("invalid mode index {0}; modes are 0, 1, 2")]
    InvalidMode(usize),

    #[error("occupation ({m1}, {m2}, {m0}) exceeds the cutoff n_max = {n_max}")]
    OccupationOutOfRange {
        m1: usize,
        m2: usize,
        m0: usize,
        n_max: usize,
    },

    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("negative time {0} passed to a pulse envelope")]
    NegativeTime(f64),

    #[error("invalid output grid: {0}")]
    InvalidGrid(String),

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("state invariant violated at t = {t}: {what} = {value:e} exceeds {limit:e}")]
    InvariantViolation {
        t: f64,
        what: &'static str,
        value: f64,
        limit: f64,
    },

    #[error("state is not block diagonal in the requested sector layout")]
    NotBlockDiagonal,

    #[error("corrupted state: {0}")]
    CorruptedState(String),

    #[error("series too short: {0}")]
    SeriesTooShort(String),

    #[error("degenerate fit input: {0}")]
    DegenerateInput(String),

    #[error("fit did not converge (best residual rms {best_rms:e})")]
    FitNotConverged { best_rms: f64 },
}
