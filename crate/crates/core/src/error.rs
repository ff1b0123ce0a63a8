use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("non-finite value {value} at node {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("invalid model parameters: {0}")]
    InvalidModel(String),

    #[error("{0} energy is only defined for one- and two-dimensional grids")]
    UnsupportedEnergyForm(&'static str),

    #[error("unknown tableau `{0}`")]
    UnknownTableau(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("energy corrector found no sign change of D up to eta = {eta_max:e}; samples {samples:?}")]
    CorrectorFailure {
        eta_max: f64,
        samples: Vec<(f64, f64)>,
    },

    #[error("blow-up: {0}")]
    BlowUp(String),

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
