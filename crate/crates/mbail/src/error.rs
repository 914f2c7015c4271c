use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("degenerate dataset: {0}")]
    DegenerateDataset(String),
    #[error("packing construction failed: reached {achieved} of {target} vectors before retry cap")]
    PackingConstruction { achieved: usize, target: usize },
    #[error("expert trajectory search exhausted {attempts} rollouts without hitting target return {target}")]
    ExpertSearch { attempts: usize, target: f64 },
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
