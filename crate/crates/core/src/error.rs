use alloc::string::String;

pub type Result<T, E = PqsqError> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PqsqError {
    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),

    #[error("majorant must vanish at zero, got f(0) = {0}")]
    MajorantNotZeroAtOrigin(f64),

    #[error("coefficients violate subquadratic growth in coordinate {coordinate} at interval {interval}")]
    NotSubquadratic { coordinate: usize, interval: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("median absolute deviation is zero")]
    DegenerateMad,

    #[error("coordinate {0} has zero characteristic distance")]
    DegenerateCoordinate(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("quadratic form {0} is not positive definite")]
    SingularForm(usize),

    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error("{context} did not converge within {iterations} iterations")]
    MaxIterations {
        context: &'static str,
        iterations: usize,
    },

    #[error("principal direction collapsed to the zero vector")]
    DirectionCollapsed,

    #[error("black hole radius underflowed below 1e-300")]
    RadiusUnderflow,

    #[error("lambda search failed to sparsify the model within {0} doublings")]
    LambdaSearchFailed(usize),

    #[error("every coefficient was absorbed by the black hole at lambda = 0")]
    AllCoefficientsAbsorbed,

    #[error("response has zero variance")]
    ZeroVariance,
}

impl PqsqError {
    /// True for failures of the numerics (non-convergence, singular systems),
    /// as opposed to invalid inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            PqsqError::SingularForm(_)
                | PqsqError::SingularSystem(_)
                | PqsqError::MaxIterations { .. }
                | PqsqError::DirectionCollapsed
                | PqsqError::RadiusUnderflow
                | PqsqError::LambdaSearchFailed(_)
                | PqsqError::AllCoefficientsAbsorbed
        )
    }
}
