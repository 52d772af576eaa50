use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the structural and simulation layers can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        actual: String,
    },
    #[error("gram matrix of space '{label}' is not symmetric (relative asymmetry {asymmetry:.3e})")]
    NonSymmetricGram { label: String, asymmetry: f64 },
    #[error("gram matrix of space '{label}' is not positive definite (smallest eigenvalue {min_eigenvalue:.6e})")]
    NonPositiveGram { label: String, min_eigenvalue: f64 },
    #[error("linear map is rank deficient (rank {rank} < {expected})")]
    RankDeficient { rank: usize, expected: usize },
    #[error("Green identity violated: residual {residual:.3e}, worst entry {worst:.3e} at ({row}, {col})")]
    GreenIdentityViolated {
        residual: f64,
        worst: f64,
        row: usize,
        col: usize,
    },
    #[error("trace map is not surjective (rank {rank} < {expected})")]
    TraceNotSurjective { rank: usize, expected: usize },
    #[error("core projection restricted to the minimal domain is not injective")]
    DegenerateCoreProjection,
    #[error("restriction is ill-posed: constraint kernel has dimension {kernel_dim}, core has dimension {core_dim}")]
    IllPosedRestriction { kernel_dim: usize, core_dim: usize },
    #[error("core projection of the restricted domain is singular (condition number {condition:.3e})")]
    SingularCoreProjection { condition: f64 },
    #[error("boundary parameter is not a contraction (dual norm {norm:.12})")]
    NotAContraction { norm: f64 },
    #[error("mass operator is not symmetric positive definite ({reason})")]
    MassNotSpd { reason: String },
    #[error("damping operator is not accretive (smallest symmetric eigenvalue {min_eigenvalue:.6e})")]
    DampingNotDissipative { min_eigenvalue: f64 },
    #[error("node is not internally well-posed: {reason}")]
    NotInternallyWellPosed { reason: String },
    #[error("Cayley parameter must be positive and finite, got {beta}")]
    NonPositiveBeta { beta: f64 },
    #[error("boundary data inconsistent with the input map (residual {residual:.3e})")]
    InconsistentBoundaryData { residual: f64 },
    #[error("invalid wave coefficients: {reason}")]
    InvalidCoefficients { reason: String },
    #[error("standing-wave oracle needs constant coefficients: {reason}")]
    NonConstantCoefficients { reason: String },
    #[error("initial state incompatible with u(0) (residual {residual:.3e})")]
    IncompatibleInitialData { residual: f64 },
    #[error("boundary block of the input map cannot be solved: {reason}")]
    SingularBoundaryBlock { reason: String },
    #[error("midpoint step matrix is singular (pivot ratio {pivot_ratio:.3e})")]
    SingularStepMatrix { pivot_ratio: f64 },
    #[error("invalid time grid: {reason}")]
    InvalidTimeGrid { reason: String },
}

impl Error {
    /// Stable variant name, used in CLI diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NonSymmetricGram { .. } => "NonSymmetricGram",
            Error::NonPositiveGram { .. } => "NonPositiveGram",
            Error::RankDeficient { .. } => "RankDeficient",
            Error::GreenIdentityViolated { .. } => "GreenIdentityViolated",
            Error::TraceNotSurjective { .. } => "TraceNotSurjective",
            Error::DegenerateCoreProjection => "DegenerateCoreProjection",
            Error::IllPosedRestriction { .. } => "IllPosedRestriction",
            Error::SingularCoreProjection { .. } => "SingularCoreProjection",
            Error::NotAContraction { .. } => "NotAContraction",
            Error::MassNotSpd { .. } => "MassNotSPD",
            Error::DampingNotDissipative { .. } => "DampingNotDissipative",
            Error::NotInternallyWellPosed { .. } => "NotInternallyWellPosed",
            Error::NonPositiveBeta { .. } => "NonPositiveBeta",
            Error::InconsistentBoundaryData { .. } => "InconsistentBoundaryData",
            Error::InvalidCoefficients { .. } => "InvalidCoefficients",
            Error::NonConstantCoefficients { .. } => "NonConstantCoefficients",
            Error::IncompatibleInitialData { .. } => "IncompatibleInitialData",
            Error::SingularBoundaryBlock { .. } => "SingularBoundaryBlock",
            Error::SingularStepMatrix { .. } => "SingularStepMatrix",
            Error::InvalidTimeGrid { .. } => "InvalidTimeGrid",
        }
    }

    pub(crate) fn dims(context: &'static str, expected: impl ToString, actual: impl ToString) -> Self {
        Error::DimensionMismatch {
            context,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}
