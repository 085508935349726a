use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Matrix or schedule shapes do not fit together.
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    /// The Gramian is not positive definite (system uncontrollable at this horizon).
    SingularGramian { ratio: f64 },
    /// V- and G-optimality need a design pool.
    MissingDesignPool,
    /// A barrier shift sits on the wrong side of the spectrum.
    BarrierViolation { shift: f64, eigenvalue: f64 },
    /// Difference of barrier potentials vanished.
    DegenerateDenominator { value: f64 },
    /// No column satisfied the upper-gain <= lower-gain test.
    NoFeasibleIndex { iteration: usize },
    InvalidBudget(&'static str),
    InvalidEps { eps: f64, min: f64 },
    /// Exhaustive enumeration refused.
    TooLarge { size: usize, limit: usize },
    IndexOutOfRange { index: usize, len: usize },
    InvalidParameter(&'static str),
    /// A decomposition of identity does not sum to the identity.
    NotIdentityDecomposition { residual: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch {
                what,
                expected,
                found,
            } => write!(f, "dimension mismatch in {what}: expected {expected}, found {found}"),
            Error::SingularGramian { ratio } => write!(
                f,
                "Gramian is singular (lambda_min/lambda_max = {ratio:e}); system is not controllable at this horizon"
            ),
            Error::MissingDesignPool => write!(f, "V/G-optimality requires a design pool"),
            Error::BarrierViolation { shift, eigenvalue } => {
                write!(f, "barrier violated: shift {shift} vs eigenvalue {eigenvalue}")
            }
            Error::DegenerateDenominator { value } => {
                write!(f, "barrier potential difference {value:e} is degenerate")
            }
            Error::NoFeasibleIndex { iteration } => {
                write!(f, "no feasible column at sparsification step {iteration}")
            }
            Error::InvalidBudget(msg) => write!(f, "invalid budget: {msg}"),
            Error::InvalidEps { eps, min } => {
                write!(f, "eps = {eps} outside the admissible range [{min}, 1]")
            }
            Error::TooLarge { size, limit } => {
                write!(f, "instance too large for enumeration ({size} > {limit})")
            }
            Error::IndexOutOfRange { index, len } => {
                write!(f, "index {index} out of range for length {len}")
            }
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::NotIdentityDecomposition { residual } => {
                write!(f, "columns do not decompose the identity (residual {residual:e})")
            }
        }
    }
}

impl core::error::Error for Error {}
