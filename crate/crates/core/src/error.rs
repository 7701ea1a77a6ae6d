use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid rotation matrix: {0}")]
    InvalidRotation(String),

    #[error("invalid object model: {0}")]
    InvalidObject(String),

    #[error("unsupported symmetry class `{0}`")]
    UnsupportedSymmetry(String),

    #[error("point is behind the camera (z = {z})")]
    BehindCamera { z: f64 },

    #[error("depth {z} m is outside the clipping range [{near}, {far}]")]
    DepthOutOfRange { z: f64, near: f64, far: f64 },

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("unknown object `{0}`")]
    UnknownObject(String),

    #[error("scene congestion: placed {placed} of {requested} instances within {tries} tries")]
    Congestion {
        placed: usize,
        requested: usize,
        tries: usize,
    },

    #[error("depth image has no valid pixel")]
    NoValidDepth,

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}
