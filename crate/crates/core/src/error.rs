use thiserror::Error;

/// Errors raised by the field, innovation, simulation and prediction layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate weight field: sigma_n^2 = 0")]
    DegenerateField,

    #[error("certified window needs {cells} cells, cap is {cap}")]
    WindowOverflow { cells: u64, cap: u64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("outside the admissible regime: {0}")]
    InvalidRegime(String),

    #[error("moment of order {order} is infinite for a tail of index {tail_index}")]
    NonintegrableMoment { order: f64, tail_index: f64 },

    #[error("weight {value} at ({r}, {s}) is not positive")]
    NegativeWeight { r: i64, s: i64, value: f64 },

    #[error("{atoms} nonzero weights exceed the enumeration cap of {cap}")]
    TooManyAtoms { atoms: usize, cap: usize },

    #[error("kernel vanishes at every design point")]
    EmptyKernelSupport,

    #[error("operation not supported for this innovation law: {0}")]
    UnsupportedModel(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
