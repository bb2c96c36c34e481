//! Error type shared by every module of the crate.

use thiserror::Error;

use crate::design::DesignResult;

/// Errors raised by chain construction, reconstruction and the designers.
#[derive(Debug, Error)]
pub enum Error {
    /// The chain data is unusable: non-finite entries, a zero coupling, or a
    /// numerically degenerate spectrum.
    #[error("invalid chain: {0}")]
    InvalidChain(String),

    /// Two chains that must be isospectral differ beyond tolerance.
    #[error("spectra differ beyond tolerance (max deviation {max_deviation:.3e})")]
    SpectrumMismatch { max_deviation: f64 },

    /// The coupling recurrence produced a non-positive `J^2`, signalling
    /// inconsistent or ill-conditioned spectral data.
    #[error("reconstruction breakdown at site {site}: J^2 = {j_squared:.3e}")]
    NumericalBreakdown { site: usize, j_squared: f64 },

    /// First-site weights must be strictly positive and sum to one.
    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    /// Every real root of the design equation was infeasible.
    #[error("no valid root: {0}")]
    NoValidRoot(String),

    /// An iterative solver stalled; `best` carries the best iterate seen.
    #[error("failed to converge after {iterations} iterations (residual {residual:.3e})")]
    ConvergenceFailure {
        iterations: usize,
        residual: f64,
        best: Option<Box<DesignResult>>,
    },

    /// The target does not fit the sparsity pattern required by a reduction.
    #[error("target does not match the required pattern: {0}")]
    PatternMismatch(String),

    /// A moment-identity denominator vanished.
    #[error("degenerate moment denominator at column {column}: {value:.3e}")]
    DegenerateMoment { column: usize, value: f64 },

    /// A scalar root finder was asked for a value outside its bracket.
    #[error("root not bracketed: {0}")]
    RootNotBracketed(String),

    /// The operation only supports a restricted family of targets.
    #[error("unsupported target: {0}")]
    UnsupportedTarget(String),

    /// The target has no overlap with the end site, so no chain can realise it.
    #[error("infeasible target: {0}")]
    InfeasibleTarget(String),
}

pub type Result<T> = std::result::Result<T, Error>;
