use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("edges meeting at node {node} are anti-parallel")]
    AntiparallelEdges { node: usize },
    #[error("edge {edge} has near-zero length")]
    DegenerateEdge { edge: usize },
    #[error("edges are parallel; edge-edge distance is undefined")]
    ParallelEdges,
    #[error("scaled contact distance {distance} is not positive")]
    NonPositiveDistance { distance: f64 },
    #[error("regularized Stokeslet log argument is not positive")]
    LogSingularity,
    #[error("mobility matrix is singular (coincident nodes?)")]
    SingularMobility,
    #[error("Newton matrix is singular at step {step}, iteration {iteration}")]
    SingularJacobian { step: usize, iteration: usize },
    #[error("Newton did not converge at step {step} after {iterations} iterations (|F| = {residual:e})")]
    NonConvergence {
        step: usize,
        iterations: usize,
        residual: f64,
    },
    #[error("contact normal force is zero")]
    ZeroNormalForce,
    #[error("trajectory layouts differ: {0}")]
    ShapeMismatch(String),
    #[error("missing force log: {0}")]
    MissingForceLog(String),
    #[error("config field `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
