use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("division by zero")]
    DivisionByZero,

    #[error("singular series: cannot invert a series that vanishes up to order {0}")]
    SingularSeries(i64),

    #[error("precision exhausted: no valid terms left in the truncation window")]
    PrecisionExhausted,

    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unbound coefficient symbol `{0}`")]
    UnboundSymbol(String),

    #[error("non-integer exponent `{0}`")]
    NonIntegerExponent(String),

    #[error("defining variable `{0}` occurs on the right-hand side")]
    DefiningVariableOnRhs(String),

    #[error("equation cannot be solved rationally for `{0}`")]
    NotSolvable(String),

    #[error("unknown family `{0}`")]
    UnknownFamily(String),

    #[error("family rejected: {0}")]
    FamilyRejected(String),

    #[error("degenerate orbit: denominator vanished identically at step {step}")]
    DegenerateOrbit { step: usize },

    #[error("resource limit reached after {} entries: {reason}", partial.len())]
    Resource { reason: String, partial: Vec<u64> },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("symbolic window too small: index {index} is outside {lo}..={hi}; a window of {required} indices is required")]
    WindowTooSmall {
        index: i64,
        lo: i64,
        hi: i64,
        required: usize,
    },

    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),

    #[error("root finding did not converge after {iterations} iterations")]
    NonConvergence {
        iterations: usize,
        partial: Vec<(f64, f64)>,
    },

    #[error("coefficient `{name}` undefined at site ({m}, {n})")]
    CoefficientUndefined { name: String, m: i64, n: i64 },

    #[error("site ({0}, {1}) lies outside the domain determined by the staircase")]
    RegionNotCovered(i64, i64),

    #[error("coefficients are not gauge equivalent to a = b: {0}")]
    NotGaugeEquivalent(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
