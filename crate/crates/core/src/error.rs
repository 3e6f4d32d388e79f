use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("side length L must be even, got {0}")]
    OddSideLength(u32),
    #[error("samples per unit m must be at least 2, got {0}")]
    TooCoarse(u32),
    #[error("dimension must be 1 or 2, got {0}")]
    BadDimension(usize),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("shift {0} is not a grid point")]
    OffGridShift(f64),
    #[error("window must be nonzero")]
    ZeroWindow,
    #[error("invalid exponent: {0}")]
    BadExponent(String),
    #[error("incompatible phase-plane axes: {0}")]
    IncompatibleAxes(String),
    #[error("symbol is not on the half-resolution carrier: {0}")]
    BadCarrier(String),
    #[error("unsupported quantization parameter {0}; only 0 and 1/2 are supported")]
    UnsupportedQuantization(f64),
    #[error("mollifier width {eps} is below the resolution floor {floor}; best achieved tolerance {best}")]
    ResolutionLimited { eps: f64, floor: f64, best: f64 },
    #[error("near-singular inversion: {0}")]
    NearSingular(String),
    #[error("algebra norm {norm} exceeds the ball radius {r}")]
    RadiusExceeded { norm: f64, r: f64 },
    #[error("residual bound failed twice in a row at step {step} (got {got}, needed {needed})")]
    RefinementStall { step: usize, got: f64, needed: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("malformed data: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
