use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {coords:?} is not on space {space}")]
    OffSpace { space: String, coords: Vec<f64> },

    #[error("orbit escaped at t = {time} (last valid state {last_state:?})")]
    Escape { time: f64, last_state: Vec<f64> },

    #[error("Hausdorff distance is undefined on an empty sample")]
    EmptySample,

    #[error("samples live on different spaces ({0} vs {1})")]
    SpaceMismatch(String, String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown gallery entry `{name}`; available: {available}")]
    UnknownFlow { name: String, available: String },

    #[error("unknown record id `{0}`")]
    UnknownRecord(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
