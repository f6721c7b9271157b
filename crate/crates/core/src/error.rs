use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The requested cutoff leaves more probability outside the truncated space
    /// than the caller tolerates.
    #[error("truncation: tail mass {tail_mass:.3e} exceeds tolerance {tolerance:.3e} at cutoff {cutoff}")]
    Truncation {
        cutoff: usize,
        tail_mass: f64,
        tolerance: f64,
    },

    #[error("joint space of dimension {dim} exceeds the oracle limit {limit}")]
    Sizing { dim: u128, limit: usize },

    #[error("operator is not Hermitian (max |M - M^dagger| = {deviation:.3e})")]
    NonHermitian { deviation: f64 },

    #[error("input is not a density matrix: {0}")]
    NotDensity(String),

    #[error("invalid mode index {index} for a {modes}-mode space")]
    InvalidMode { index: usize, modes: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("precision delta = {delta} lies outside the validity interval [{lo:.2e}, {hi:.2e}]")]
    DeltaOutsideInterval { delta: f64, lo: f64, hi: f64 },

    #[error("{name} = {value} is out of range: {expected}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("degenerate amplitude: {0}")]
    Degenerate(String),

    #[error("unsupported state family for {op}: {family}")]
    UnsupportedFamily { op: &'static str, family: String },

    #[error("cutoff headroom exceeded: need {needed} levels per mode, limit is {limit}")]
    Headroom { needed: usize, limit: usize },

    #[error("grid resolution {step:.4} exceeds the fringe requirement {required:.4}")]
    Resolution { step: f64, required: f64 },

    #[error("feature extraction failed: {0}")]
    PeakDetection(String),

    #[error("invalid parameter: {0}")]
    Invalid(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn out_of_range(name: &'static str, value: f64, expected: &'static str) -> Self {
        Error::OutOfRange {
            name,
            value,
            expected,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
