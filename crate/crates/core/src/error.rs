use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("axis {axis}: dimension {n} is too small (need at least 2 cells)")]
    DimensionTooSmall { axis: usize, n: usize },
    #[error("cell spacing must be positive and finite, got {0}")]
    BadSpacing(f64),
    #[error("axis {axis}: periodic boundaries must be set on both sides")]
    HalfPeriodic { axis: usize },
    #[error("axis {axis}: boundary value is not finite")]
    BadBoundaryValue { axis: usize },
    #[error("axis {axis}: unsupported combination: {what}")]
    UnsupportedBoundary { axis: usize, what: &'static str },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhaseError {
    #[error("band width {width} μm is narrower than one cell ({spacing} μm)")]
    BandTooNarrow { width: f64, spacing: f64 },
    #[error("wall covers the entire domain")]
    WallCoversDomain,
    #[error("phase set needs at least two phases, got {0}")]
    TooFewPhases(usize),
    #[error("surface tension matrix is not symmetric at ({0}, {1})")]
    AsymmetricTension(usize, usize),
    #[error("surface tension ({0}, {1}) is negative")]
    NegativeTension(usize, usize),
    #[error("field length {got} does not match grid ({expected})")]
    LengthMismatch { expected: usize, got: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error("CFL number {cfl:.4} exceeds limit {limit}")]
    Cfl { cfl: f64, limit: f64 },
    #[error("zero density on open face {face} of axis {axis}")]
    ZeroFaceDensity { axis: usize, face: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PressureError {
    #[error("fluid cell {0} has non-positive density")]
    ZeroDensity(usize),
    #[error("PCG did not converge in {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("no triple junction found")]
    NoJunction,
    #[error("only {0} contour points near the junction (need at least 3)")]
    TooFewPoints(usize),
    #[error("field has no interface band")]
    NoBand,
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Pressure(#[from] PressureError),
    #[error(transparent)]
    Phase(#[from] PhaseError),
    #[error("non-finite value in {field} at step {step}")]
    NonFinite { field: &'static str, step: u64 },
    #[error("output: {0}")]
    Output(#[from] IoError),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Read(#[from] std::io::Error),
    #[error("parse error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse {
        line: Option<usize>,
        message: String,
    },
    #[error("invalid config:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Phase(#[from] PhaseError),
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint was written for a different configuration")]
    HashMismatch,
    #[error("checkpoint is truncated")]
    Truncated,
    #[error("malformed file: {0}")]
    Format(String),
}
