use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch: expected {expected} values, found {found}")]
    ShapeMismatch { expected: usize, found: usize },

    /// The H¹ guard tripped or the state stopped being finite.
    #[error("blow-up at t = {time}: H1 norm {norm:e} exceeds guard")]
    BlowUp { time: f64, norm: f64 },

    #[error("unknown observable `{0}`")]
    UnknownObservable(String),

    #[error("time {0} is not on the sampling schedule")]
    TimeNotSampled(f64),

    #[error("degenerate window: {0}")]
    DegenerateWindow(String),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("missing snapshot at t = {0}")]
    MissingSnapshot(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
