use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unknown field tag {0:?}")]
    UnknownField(String),
    #[error("D={0} must be a squarefree integer greater than 1")]
    BadDiscriminant(i64),
    #[error("element is not totally positive")]
    NotTotallyPositive,
    #[error("element is not integral")]
    NotIntegral,
    #[error("matrix shape mismatch: {0}")]
    Shape(String),
    #[error("Gram matrix is not symmetric at ({0},{1})")]
    NotSymmetric(usize, usize),
    #[error("diagonal entry {0} is not in 2O_F")]
    OddDiagonal(usize),
    #[error("form is not positive definite at embedding {embedding} (leading minor {minor})")]
    NotPositiveDefinite { embedding: usize, minor: usize },
    #[error("singular matrix")]
    Singular,
    #[error("ring of integers is not norm-Euclidean for this division")]
    NotEuclidean,
    #[error("quaternion algebra is not totally definite")]
    NotDefinite,
    #[error("basis elements are linearly dependent")]
    Dependent,
    #[error("order not closed under multiplication: basis product ({0},{1}) leaves the span")]
    NotClosed(usize, usize),
    #[error("1 is not in the order")]
    MissingOne,
    #[error("unsupported ramified prime {0}")]
    UnsupportedPrime(u64),
    #[error("level {0} must be squarefree and coprime to {1}")]
    BadLevel(u64, u64),
    #[error("no primitive element of reduced norm {0} found")]
    NoPrimitiveElement(u64),
    #[error("form is not of split shape y0^2 + Q~(y1,y2,y3)")]
    NotSplit,
    #[error("direction {0} is not unit length for the ternary form")]
    DirectionNotUnit(usize),
    #[error("h1 witness {0} exceeds threshold {1}")]
    HOneWitness(f64, f64),
    #[error("degenerate quadratic part")]
    Degenerate,
    #[error("t = +-1 is outside the domain of the decay bound")]
    DecayDomain,
    #[error("embedding {0} of the target vanishes")]
    ZeroTarget(usize),
    #[error("minimax problem is unbounded below")]
    Unbounded,
    #[error("savings must be positive")]
    NonPositiveSaving,
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
