use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("series order mismatch: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("singular leading coefficient (smallest singular value {smallest_singular_value:.3e}, condition {condition:.3e})")]
    Singular {
        smallest_singular_value: f64,
        condition: f64,
    },

    #[error("leading coefficient deviates from identity by {0:.3e}; normalize before taking the inverse square root")]
    NotIdentityLeading(f64),

    #[error("no spectral gap: eigenvalue {0:.3e} too close to zero")]
    NoSpectralGap(f64),

    #[error("projectors too far apart: ||P0 - Pg|| = {0:.6}")]
    ProjectorsTooFar(f64),

    #[error("contour does not separate the spectrum: {0}")]
    ContourEnclosure(String),

    #[error("contour quadrature not converged (coefficient change {change:.3e} on doubling m_nodes = {m_nodes}); increase m_nodes")]
    ContourNotConverged { change: f64, m_nodes: usize },

    #[error("radial grid under-resolved (norm round-trip error {0:.3e}); enlarge the radial grid")]
    RadialResolution(f64),

    #[error("tensor dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("{0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
