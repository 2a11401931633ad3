use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{name} must be {requirement}")]
    InvalidParam { name: &'static str, requirement: &'static str },

    #[error("invalid domain: {0}")]
    Domain(String),

    #[error("partition not involutive: face {face}, neuron {i} maps to {j} but {j} maps to {back}")]
    NotInvolutive { face: usize, i: usize, j: usize, back: usize },

    #[error("face {face} unlabeled for neuron {neuron}")]
    Unlabeled { face: usize, neuron: usize },

    #[error("invalid partition: {0}")]
    Partition(String),

    #[error("invalid kinetics: {0}")]
    Kinetics(String),

    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("eigen-solve did not converge after {iterations} iterations")]
    EigenDiverged { iterations: usize },

    #[error("non-finite or runaway state at t = {t} (max |u| = {max_abs:.3e})")]
    BlowUp { t: f64, max_abs: f64 },

    #[error("step {step}: {source}")]
    Step { step: usize, source: Box<Error> },

    #[error("missing input: {0}")]
    Missing(&'static str),

    #[error("decay rate undefined: {0}")]
    RateUndefined(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
