use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("geometry conflict: {0}")]
    GeometryConflict(String),
    #[error("point ({0}, {1}) is outside the mesh")]
    OutOfDomain(f64, f64),
    #[error("singular point: {0}")]
    SingularPoint(String),
    #[error("integration domain: {0}")]
    IntegrationDomain(String),
    #[error("configuration error:\n{}", .0.join("\n"))]
    Config(Vec<String>),
    #[error("nonconvergence: {0}")]
    NonConvergence(String),
    #[error("linear solver: {0}")]
    LinearSolver(String),
    #[error("growth stopped: {0}")]
    GrowthStopped(String),
    #[error("mesh format: line {line}: {msg}")]
    MeshFormat { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(vec![msg.into()])
    }
}
