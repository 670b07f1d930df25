use thiserror::Error;

/// Errors raised by the measurement-model operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |M - M^dagger| = {residual:e})")]
    NonHermitianInput { residual: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("invalid density operator: {0}")]
    InvalidDensity(String),

    #[error("basis vectors are not orthonormal (max residual {residual:e})")]
    NotOrthonormal { residual: f64 },

    #[error("bases are mutually orthogonal at (k={k}, mu={mu}); |(mu|k>| = {overlap:e}")]
    MutuallyOrthogonalPair { k: usize, mu: usize, overlap: f64 },

    #[error("matrix is not a projector (max |P^2 - P| = {residual:e})")]
    NotAProjector { residual: f64 },

    #[error("invalid probe: {0}")]
    InvalidProbe(String),

    #[error("probe is not centered: <Q> = {mean:e}")]
    ProbeNotCentered { mean: f64 },

    #[error("probe characteristic function is flat (|lambda_bar(0)| = {value:e})")]
    DegenerateProbe { value: f64 },

    #[error("grid [{grid_min}, {grid_max}] does not cover required span [{required_min}, {required_max}]")]
    GridTooNarrow {
        grid_min: f64,
        grid_max: f64,
        required_min: f64,
        required_max: f64,
    },

    #[error("postselection is orthogonal to the state (Tr(rho P_phi) = {overlap:e})")]
    OrthogonalPostselection { overlap: f64 },

    #[error("reconstruction inversion is singular: {0}")]
    SingularInversion(String),

    #[error("zero variance: correlation coefficient is 0/0")]
    ZeroVariance,

    #[error("density has a negative value {value:e} at cell {index}")]
    NegativeDensity { index: usize, value: f64 },

    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
