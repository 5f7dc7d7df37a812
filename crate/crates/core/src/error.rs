use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("difference order {requested} exceeds cap {cap}")]
    OrderCapExceeded { requested: usize, cap: usize },

    #[error("direction {0:?} not in stencil")]
    DirectionNotInStencil(Vec<i64>),

    #[error("stencil is invalid: {0}")]
    InvalidStencil(String),

    #[error("coefficient evaluation failed: {0}")]
    CoefficientEval(String),

    #[error("declared bound M0 = {declared} is smaller than sampled |p| = {sampled}")]
    BoundTooSmall { declared: f64, sampled: f64 },

    #[error("grids are not dyadically nested: {0}")]
    NonNestedGrids(String),

    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),

    #[error("non-finite value detected at t = {time}")]
    NonFinite { time: f64 },

    #[error("monotonicity violated: min chi = {min_chi} at direction {direction:?} (no override set)")]
    MonotonicityViolated { min_chi: f64, direction: Vec<i64> },

    #[error("centered and one-sided forms of the q-part disagree: relative gap {0}")]
    FormMismatch(f64),

    #[error("maximum principle requires sup(C - c) < 0, got nu = {0}")]
    NonNegativeNu(f64),

    #[error("contraction denominator vanishes at grid index {0}")]
    ZeroDenominator(usize),

    #[error("iteration budget {max_iters} exceeded (rho = {rho}, last defect = {defect})")]
    MaxItersExceeded { max_iters: usize, rho: f64, defect: f64 },

    #[error("extrapolation order {requested} beyond guard {guard}")]
    OrderBeyondGuard { requested: usize, guard: usize },

    #[error("tilde weights require odd order, got {0}")]
    TildeOrderEven(usize),

    #[error("extrapolation plan requires verified stencil flags: {0}")]
    FlagRequirementUnmet(String),

    #[error("linear system is singular")]
    SingularSystem,

    #[error("expression error: {0}")]
    Expr(String),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("unknown preset '{0}'")]
    UnknownPreset(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
