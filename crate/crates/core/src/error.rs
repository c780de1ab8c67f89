use thiserror::Error;

/// Errors raised by the solvers and the configuration layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("under-resolved mesh: {0} elements per wavelength (minimum 5)")]
    UnderResolvedMesh(usize),

    #[error("degenerate permittivity for material '{0}'")]
    DegeneratePermittivity(String),

    #[error("unstable cavity: height {height:.4e} m >= radius of curvature {radius:.4e} m")]
    UnstableCavity { height: f64, radius: f64 },

    #[error("eigensolver did not converge after {iterations} iterations (worst relative residual {residual:.3e}, {converged}/{requested} pairs converged)")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        converged: usize,
        requested: usize,
    },

    #[error("singular pivot {pivot:.3e} at row {row} during factorization")]
    SingularPivot { row: usize, pivot: f64 },

    #[error("unnormalized mode: {0}")]
    UnnormalizedMode(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("correction singular: detuning {detuning:.4e} Hz cancels anharmonicity")]
    CorrectionSingular { detuning: f64 },

    #[error("regime violation: negative radicand {0:.4e} in coupling inversion")]
    RegimeViolation(f64),

    #[error("empty reference library")]
    EmptyLibrary,

    #[error("zero strain energy")]
    ZeroStrainEnergy,

    #[error("zero total energy")]
    ZeroEnergy,

    #[error("missing surface field model for surface '{0}'")]
    MissingSurfaceField(String),

    #[error("point ({0:.4e}, {1:.4e}, {2:.4e}) lies outside the piezoelectric region")]
    OutsideRegion(f64, f64, f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("config error at '{key}': {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidInput(message.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
