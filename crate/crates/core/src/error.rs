use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,
    #[error("field mismatch: {0} vs {1}")]
    FieldMismatch(String, String),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("polynomial is derogatory (constant term is zero)")]
    DerogatoryInput,
    #[error("polynomial does not split over the field")]
    NotSplit,
    #[error("lambda must be nonzero")]
    ZeroLambda,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("matrix is singular")]
    Singular,
    #[error("operator is not annihilated by the given polynomial")]
    NotAnnihilated,
    #[error("no dominant eigenvalue")]
    NoDominantEigenvalue,
    #[error("unknown basis index {0}")]
    UnknownIndex(String),
    #[error("operator carries no inverse witness")]
    NoWitness,
    #[error("target not reached within orbit depth {0}")]
    NotReached(usize),
    #[error("closure exceeded bound {0}")]
    BoundExceeded(usize),
    #[error("stratification is not semi-good: {0}")]
    NotSemiGood(String),
    #[error("stratification builder stuck: {0}")]
    BuilderStuck(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("scalar is not acceptable for the triple")]
    NotAcceptable,
    #[error("operator has no free part")]
    NoFreePart,
    #[error("cyclic evidence failed: {0}")]
    NotElementaryEvidence(String),
    #[error("invariant-subspace hypothesis violated: {0}")]
    HypothesisViolation(String),
    #[error("unsupported field for this operation: {0}")]
    UnsupportedField(String),
    #[error("refused: {0}")]
    Refused(Refusal),
    #[error("search budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("operator is not invertible: {0}")]
    NotInvertible(String),
    #[error("certificate failed verification: {0}")]
    VerificationFailed(String),
}

/// Machine-readable reasons for declining a factorization.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "reason", content = "detail")]
pub enum Refusal {
    NotAcceptable(String),
    DeterminantObstruction(String),
    SearchExhausted(String),
    BuilderStuck(String),
    Unsupported(String),
}

impl Refusal {
    pub fn code(&self) -> &'static str {
        match self {
            Refusal::NotAcceptable(_) => "NotAcceptable",
            Refusal::DeterminantObstruction(_) => "DeterminantObstruction",
            Refusal::SearchExhausted(_) => "SearchExhausted",
            Refusal::BuilderStuck(_) => "BuilderStuck",
            Refusal::Unsupported(_) => "Unsupported",
        }
    }

    pub fn detail(&self) -> &str {
        match self {
            Refusal::NotAcceptable(s)
            | Refusal::DeterminantObstruction(s)
            | Refusal::SearchExhausted(s)
            | Refusal::BuilderStuck(s)
            | Refusal::Unsupported(s) => s,
        }
    }
}

impl std::fmt::Display for Refusal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.code(), self.detail())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
