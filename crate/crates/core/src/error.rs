use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unknown preset {kind} '{name}'")]
    UnknownPreset { kind: &'static str, name: String },

    #[error("parabolicity violated: {0}")]
    Parabolicity(String),

    #[error("growth constant violates H3 side condition: C = {c} must be below lambda0/(4T) = {limit}")]
    GrowthCondition { c: f64, limit: f64 },

    #[error("operation requires constant coefficients")]
    NonConstantCoefficients,

    #[error("diffusion matrix is singular or not positive definite")]
    SingularDiffusion,

    #[error("closed-form kernel backend requires constant coefficients")]
    BackendMismatch,

    #[error("time argument {0} outside the admissible range")]
    InvalidTime(f64),

    #[error("finite-difference step {dt} exceeds the stability limit {limit}")]
    Stability { dt: f64, limit: f64 },

    #[error("finite-difference box too small: |phi| = {value} on the boundary exceeds {tolerance}")]
    BoxTooSmall { value: f64, tolerance: f64 },

    #[error("missing declared constant: {0}")]
    MissingConstant(&'static str),

    #[error("path leaves E_R at node {node} (t = {time}): distance {distance} > R = {radius}")]
    LeftBall {
        node: usize,
        time: f64,
        distance: f64,
        radius: f64,
    },

    #[error("Picard iteration did not converge in {iterations} iterations (last contraction ratio {last_ratio})")]
    MaxIterations { iterations: usize, last_ratio: f64 },

    #[error("no admissible contraction horizon: {0}")]
    DegenerateHorizon(String),

    #[error("segment horizon {t_bar} below the minimum step {min_step}")]
    HorizonUnderflow { t_bar: f64, min_step: f64 },

    #[error("discrete fixed point diverged: {0}")]
    Divergence(String),

    #[error("path too coarse: {0} nodes, need at least 3")]
    PathTooCoarse(usize),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
