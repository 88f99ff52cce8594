use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("point {point:?} lies outside the domain {domain}")]
    Domain { point: Vec<f64>, domain: String },

    #[error("derivative undefined at {point:?}: {reason}")]
    UndefinedDerivative { point: Vec<f64>, reason: String },

    /// The target lies too close to the image of the boundary for the grid resolution.
    #[error(
        "boundary gap {gap:.3e} does not exceed interpolation error {interpolation_error:.3e}; \
         refine grid to about {suggested_subdivisions} subdivisions per axis"
    )]
    RefineGrid {
        gap: f64,
        interpolation_error: f64,
        suggested_subdivisions: usize,
    },

    #[error("degenerate simplex image persisted after {retries} perturbation retries")]
    Degenerate { retries: usize },

    #[error("grid function carries no modulus-of-continuity certificate")]
    MissingModulus,

    #[error("Hölder embedding needs s*p > d (s={s}, p={p}, d={d})")]
    EmbeddingInapplicable { s: f64, p: f64, d: usize },

    #[error("epsilon {epsilon:.3e} is below the usable minimum {minimum:.3e} for this resolution")]
    EpsilonTooSmall { epsilon: f64, minimum: f64 },

    #[error("quadrature did not converge: {detail}")]
    Quadrature { detail: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
