use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("states live on different grids")]
    GridMismatch,

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("field is not commensurate with the periodic box: {0}")]
    NonCommensurate(String),

    #[error("operation not supported for this generator: {0}")]
    UnsupportedSpec(String),

    #[error("Krylov step did not converge (residual {residual:.3e} > tol {tol:.3e} at dt = {dt:.3e})")]
    KrylovNotConverged { residual: f64, tol: f64, dt: f64 },

    #[error("hermiticity guard tripped: defect {defect:.3e} exceeds {limit:.3e}")]
    HermiticityGuard { defect: f64, limit: f64 },

    #[error("norm drift {drift:.3e} exceeds {limit:.3e} in the step at t = {t}")]
    NormDrift { drift: f64, limit: f64, t: f64 },

    #[error("no bound state: {0}")]
    NoBoundState(String),

    #[error("iteration did not converge: {0}")]
    NotConverged(String),

    #[error("size cap exceeded: {0}")]
    SizeCap(String),

    #[error("observer failed at t = {t}: {message}")]
    Observer { t: f64, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by user input rather than by the numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Grid(_)
                | Error::GridMismatch
                | Error::NonCommensurate(_)
                | Error::UnsupportedSpec(_)
                | Error::SizeCap(_)
        )
    }
}
