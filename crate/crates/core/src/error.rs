use thiserror::Error;

/// Errors raised by model construction, operator assembly and the eigensolver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("potential parse error: {0}")]
    Parse(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("evenness violation at site {site:?}: v({site:?}) = {value}, v(-s) = {mirror}")]
    EvennessViolation {
        site: [i64; 3],
        value: f64,
        mirror: f64,
    },

    #[error("duplicate site {0:?} in potential")]
    DuplicateSite([i64; 3]),

    #[error("non-finite potential value at site {0:?}")]
    NonFinite([i64; 3]),

    #[error("invalid mass {0}: masses must be positive and finite")]
    InvalidMass(f64),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid too small: N = {n} but support radius {radius} needs N >= {needed}")]
    GridTooSmall {
        n: usize,
        radius: i64,
        needed: usize,
    },

    #[error(
        "potential has negative value {value} at site {site:?}; Birman-Schwinger path needs v >= 0"
    )]
    NegativePotential { site: [i64; 3], value: f64 },

    #[error("spectral parameter z = {z} is not below the grid-sampled band minimum {grid_min}")]
    ZNotBelowBand { z: f64, grid_min: f64 },

    #[error("zero potential: {0}")]
    ZeroPotential(&'static str),

    #[error("matrix is not symmetric: |a[{i}][{j}] - a[{j}][{i}]| = {diff}")]
    NotSymmetric { i: usize, j: usize, diff: f64 },

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("empty spectrum")]
    EmptySpectrum,

    #[error("eigensolver did not converge after {0} iterations")]
    NoConvergence(usize),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NoConvergence(_) | Error::Numerical(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
