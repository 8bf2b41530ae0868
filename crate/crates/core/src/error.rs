use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid subsystem dimensions: {0}")]
    InvalidDims(String),

    #[error("subsystem index {index} out of range for {count} subsystems")]
    SubsystemOutOfRange { index: usize, count: usize },

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("not a density matrix: {0}")]
    NotDensity(String),

    #[error("operator trace is {0}, expected 1")]
    NonUnitTrace(f64),

    #[error("eigensolver did not converge within {0} iterations")]
    EigenNonConvergence(usize),

    #[error("parameter `{name}` = {value} outside {range}")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("invalid polarization basis label `{0}` (expected x, y or z)")]
    InvalidBasis(String),

    #[error("observable set is not tomographically complete (rank {rank} of {required})")]
    NotTomographicallyComplete { rank: usize, required: usize },

    #[error("expectation data inconsistent with the observable set (residual {0:e})")]
    InconsistentData(f64),

    #[error("full observables violate the linear dependencies of the targets (residual {0:e})")]
    IncompatibleDependencies(f64),

    #[error("observable lists differ in length: {targets} targets vs {fulls} full operators")]
    LengthMismatch { targets: usize, fulls: usize },

    #[error("map is not trace preserving (deviation {0:e})")]
    NotTracePreserving(f64),

    #[error("state has weight {weight:e} above the truncation n_max = {n_max}")]
    TruncationExceeded { weight: f64, n_max: usize },

    #[error("string length j = {0} is even; the anticommutation certificate needs odd j")]
    EvenStringLength(usize),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("semidefinite solver failure: {0}")]
    Solver(String),

    #[error("no boundary in range: feasibility at p_lo = {p_lo} is {lo_feasible}, at p_hi = {p_hi} is {hi_feasible}")]
    NotBracketing {
        p_lo: f64,
        p_hi: f64,
        lo_feasible: bool,
        hi_feasible: bool,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures of the numerical machinery rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::EigenNonConvergence(_) | Error::Solver(_))
    }
}
