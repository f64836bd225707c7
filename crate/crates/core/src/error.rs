use thiserror::Error;

use crate::matrix::Matrix;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("ring has no finite enumeration")]
    InfiniteRing,

    #[error("invalid ring specification `{0}`")]
    RingSpec(String),

    #[error("cannot parse `{text}` as an element of {ring}")]
    ElementParse { text: String, ring: String },

    #[error("ring axiom `{axiom}` fails on {ring}")]
    AxiomViolated { axiom: &'static str, ring: String },

    #[error("index ({i}, {j}) out of range for dimension {n}")]
    IndexOutOfRange { i: usize, j: usize, n: usize },

    #[error("dimension {n} is too small (need at least {min})")]
    DimensionTooSmall { n: usize, min: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("oracle returned no valid witness: {0}")]
    InconsistentOracle(String),

    #[error("no witness recorded for unit pair ({0}, {1})")]
    MissingWitness(usize, usize),

    #[error("base ring {0} is not commutative")]
    NonCommutativeBase(String),

    #[error("map is not a derivation: {0}")]
    NotADerivation(String),

    #[error("verification failed at {}", .counterexample.literal_string())]
    VerificationFailed { counterexample: Box<Matrix> },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("word must be nonempty")]
    EmptyWord,

    #[error("invalid word symbol `{0}` (expected `x` or `y`)")]
    WordSymbol(char),

    #[error("closure exceeded budget of {0} elements")]
    ClosureBudgetExceeded(usize),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
