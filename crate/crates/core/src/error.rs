use thiserror::Error;

/// Everything that can go wrong while building a pole assignment.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssignError {
    #[error("input matrix has numerical rank {rank} but {needed} is required")]
    RankDeficientInput { rank: usize, needed: usize },

    #[error("vectors are numerically dependent")]
    DependentVectors,

    #[error("matrix is not symmetric (asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("eigenvalue iteration did not converge")]
    ConvergenceFailure,

    #[error("pole list is not closed under complex conjugation: {0}")]
    NotConjugateClosed(String),

    #[error("pole {0} appears in two non-adjacent groups")]
    DuplicateSplitGroup(String),

    #[error("invalid pole entry: {0}")]
    InvalidPole(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("(A, B) is not controllable: Krylov rank {rank} < {n}")]
    Uncontrollable { rank: usize, n: usize },

    #[error("feasibility breakdown: {0}")]
    FeasibilityBreakdown(String),

    #[error("requested {requested} directions but the state block has rank {rank}")]
    InsufficientRank { requested: usize, rank: usize },

    #[error("real and imaginary parts of the singular vector are dependent")]
    DependentRealImag,

    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),

    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),

    #[error("triangular factor R is singular")]
    SingularR,

    #[error("non-finite entry in {0}")]
    NonFinite(String),

    #[error("random problem generation failed after {0} attempts")]
    GenerationFailure(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unreadable input: {0}")]
    Input(String),
}

impl AssignError {
    /// Whether this error stems from bad input rather than a numerical
    /// breakdown. The CLI maps the former to exit code 2, the latter to 3.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            AssignError::NotConjugateClosed(_)
                | AssignError::DuplicateSplitGroup(_)
                | AssignError::InvalidPole(_)
                | AssignError::DimensionMismatch(_)
                | AssignError::NonFinite(_)
                | AssignError::InvalidConfig(_)
                | AssignError::Input(_)
                | AssignError::NotSymmetric { .. }
                | AssignError::RankDeficientInput { .. }
                | AssignError::Uncontrollable { .. }
                | AssignError::UnsupportedConfiguration(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, AssignError>;
