use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by state construction, measurement, and fitting.
#[derive(Debug, Error)]
#[non_exhaustive]
pub enum Error {
    #[error("dimension {0} is not supported, expected 2, 4 or 8")]
    UnsupportedDimension(usize),
    #[error("tensor product of dimensions {0} and {1} exceeds the 8-dimensional limit")]
    DimensionOverflow(usize, usize),
    #[error("dimension mismatch: got {0}, expected {1}")]
    DimensionMismatch(usize, usize),
    #[error("expected {expected} entries for a {dim}x{dim} matrix, got {got}")]
    BadEntryCount { dim: usize, expected: usize, got: usize },
    #[error("non-finite component in amplitudes or matrix entries")]
    NonFinite,
    #[error("state has zero norm")]
    ZeroNorm,
    #[error("amplitudes are not normalized: squared norm is {0}")]
    NotNormalized(f64),
    #[error("matrix is not unitary")]
    NotUnitary,
    #[error("matrix is not Hermitian")]
    NotHermitian,
    #[error("matrix trace is {0}, expected 1")]
    BadTrace(f64),
    #[error("matrix has a negative eigenvalue: {0}")]
    NotPositive(f64),
    #[error("visibility must be within [0, 1], got {0}")]
    VisibilityOutOfRange(f64),
    #[error("relative phase must be finite, got {0}")]
    PhaseOutOfRange(f64),
    #[error("sfg efficiency must be within (0, 1], got {0}")]
    EfficiencyOutOfRange(f64),
    #[error("overlap sigma must be positive and finite, got {0}")]
    SigmaOutOfRange(f64),
    #[error("prism offset must be finite, got {0}")]
    OffsetOutOfRange(f64),
    #[error("wavelength must be positive and finite, got {0}")]
    WavelengthOutOfRange(f64),
    #[error("classical message code must fit in two bits, got {0}")]
    BadMessageCode(u8),
    #[error("wire byte {0:#04x} has nonzero padding bits")]
    BadWireByte(u8),
    #[error("the no-detection outcome carries no classical message")]
    NoDetection,
    #[error("detector {0} never fires for this state")]
    ImpossibleOutcome(String),
    #[error("fringe fit needs at least 8 points, got {0}")]
    TooFewFitPoints(usize),
    #[error("fringe fit needs points spanning at least 180 degrees, got {0:.3}")]
    InsufficientSpan(f64),
    #[error("fit is degenerate: data shows no usable structure")]
    DegenerateFit,
    #[error("records mix detector pairs: {0} and {1}")]
    MixedDetectorPairs(String, String),
    #[error("unknown detector pair label {0:?}")]
    UnknownDetectorPair(String),
    #[error("CSV line {line}: {message}")]
    CsvFormat { line: usize, message: String },
}
