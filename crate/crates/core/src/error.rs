//! Error type shared across the crate.

use thiserror::Error;

/// All failure modes surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension {0}: truncated Fock space needs dim >= 2")]
    InvalidDimension(usize),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("truncation too small: tail mass {tail:.3e} exceeds {limit:.3e} at dim {dim}")]
    TruncationTooSmall { dim: usize, tail: f64, limit: f64 },

    #[error("displacement |alpha|^2 = {0:.3} leaves the truncated space (dim {1})")]
    DisplacementOutOfRange(f64, usize),

    #[error("not a valid density matrix: {0}")]
    InvalidDensity(String),

    #[error("not a valid characteristic grid: {0}")]
    InvalidGrid(String),

    #[error("grid aliasing: boundary-band RMS {band:.3e} exceeds {limit:.3e} of peak")]
    Aliasing { band: f64, limit: f64 },

    #[error("unstable Hamiltonian: z1 = {z1} <= 2|z2| = {two_abs_z2}, z0 imaginary")]
    Unstable { z1: f64, two_abs_z2: f64 },

    #[error("degenerate Hamiltonian: z0 = 0, normal form does not exist")]
    Degenerate,

    #[error("truncation not converged: doubling dim changes the spectrum by {0:.3e}")]
    TruncationNotConverged(f64),

    #[error("unsupported apparatus: kick density asymmetry {0:.3e} (g must be radial)")]
    UnsupportedApparatus(f64),

    #[error("kick table not normalizable: {0}")]
    BadKickTable(String),

    #[error("zero-probability measurement outcome")]
    ZeroProbability,

    #[error("rejection envelope failure: density/envelope ratio {0:.3} above bound")]
    EnvelopeFailure(f64),

    #[error("quadrature under-resolved: {0}")]
    QuadratureFailure(String),

    #[error("convergence audit failed: halving dt changed results by {seen:.3e} (limit {limit:.3e})")]
    ConvergenceAudit { seen: f64, limit: f64 },

    #[error("integrator drift: {0}")]
    IntegratorDrift(String),

    #[error("positivity violation: min eigenvalue {0:.3e}")]
    PositivityViolation(f64),

    #[error("point ({re}, {im}) outside source grid of extent {extent}")]
    OutsideGrid { re: f64, im: f64, extent: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed grid file: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
