//! Crate-wide error type.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A frequency is not an integer multiple of the harmonic grid 2π/τ.
    GridMismatch { what: String, value: f64, grid: f64 },
    /// Fourier synthesis produced an imaginary residual above tolerance.
    ConjugateSymmetry { residual: f64 },
    /// Event detection cannot separate two folding events at the current grid.
    Resolution { time: f64 },
    /// Residue breakpoints do not tile the sample index range.
    Partition { detail: String },
    /// Operation needs ground-truth samples that the capture does not carry.
    MissingGroundTruth,
    /// A stated precondition does not hold.
    Precondition(String),
    /// Capture too short for the requested difference order.
    InsufficientLength { needed: usize, got: usize },
    /// Not enough usable DFT bins for the requested model order.
    InsufficientData { needed: usize, got: usize },
    /// The out-of-band partition is empty at this (K, band) combination.
    DegeneratePartition { k: usize, q_high_base: i64 },
    /// Requested mode is not supported.
    UnsupportedMode(String),
    /// No admissible sampling period; the reason names the failed inequality.
    InfeasiblePlan { reason: String },
    /// Carrier phase too close to a zero of sin for remodulation.
    IllConditionedPhase { sin_theta: f64 },
    /// Sequences must have equal length.
    LengthMismatch { left: usize, right: usize },
    /// Recovery did not produce a self-consistent unfolding.
    RecoveryFailed { detail: String },
    /// Malformed capture or config file.
    Format(String),
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::GridMismatch { what, value, grid } => {
                write!(f, "{what} = {value} is not on the harmonic grid (step {grid})")
            }
            Error::ConjugateSymmetry { residual } => {
                write!(f, "imaginary residual {residual:e} violates conjugate symmetry")
            }
            Error::Resolution { time } => {
                write!(f, "two folding events within one grid step near t = {time}; refine the grid")
            }
            Error::Partition { detail } => write!(f, "residue cells must tile the index range: {detail}"),
            Error::MissingGroundTruth => write!(f, "capture carries no ground-truth samples"),
            Error::Precondition(msg) => write!(f, "precondition violated: {msg}"),
            Error::InsufficientLength { needed, got } => {
                write!(f, "capture of length {got} is too short (need > {needed})")
            }
            Error::InsufficientData { needed, got } => {
                write!(f, "need at least {needed} usable bins, got {got}")
            }
            Error::DegeneratePartition { k, q_high_base } => {
                write!(f, "no out-of-band bins: K = {k}, baseband index {q_high_base}")
            }
            Error::UnsupportedMode(msg) => write!(f, "unsupported mode: {msg}"),
            Error::InfeasiblePlan { reason } => write!(f, "infeasible sampling plan: {reason}"),
            Error::IllConditionedPhase { sin_theta } => {
                write!(f, "carrier phase ill-conditioned: sin θ_C = {sin_theta:e}")
            }
            Error::LengthMismatch { left, right } => {
                write!(f, "length mismatch: {left} vs {right}")
            }
            Error::RecoveryFailed { detail } => write!(f, "recovery failed: {detail}"),
            Error::Format(msg) => write!(f, "malformed input: {msg}"),
            Error::Io(msg) => write!(f, "i/o error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
