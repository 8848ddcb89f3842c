use thiserror::Error;

/// Errors raised by the toolkit.
///
/// Geometry and assumption failures are kept apart from numerical ones so the
/// command-line front end can map them onto distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid surface: {0}")]
    InvalidSurface(String),

    #[error("surface is not strictly convex: {0}")]
    NotStrictlyConvex(String),

    #[error("chart radius {r0:.3e} is below the mesh spacing {spacing:.3e}; refine the surface")]
    ChartTooCoarse { r0: f64, spacing: f64 },

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("cavities {0} and {1} overlap or touch")]
    Overlap(usize, usize),

    #[error("probe {0:?} is not strictly outside the outer boundary")]
    ProbeInside([f64; 3]),

    #[error("point {0:?} is not inside the outer boundary")]
    PointOutside([f64; 3]),

    #[error("coincident points in kernel evaluation")]
    Coincident,

    #[error("non-positive real part of lambda: {0}")]
    NonPositiveMu(f64),

    #[error("singular linear system at lambda = {re}+{im}i")]
    Singular { re: f64, im: f64 },

    #[error("invalid lambda grid: {0}")]
    InvalidGrid(String),

    #[error("assumption violated: {0}")]
    Assumption(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("scene file: {0}")]
    Parse(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
