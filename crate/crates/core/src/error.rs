use thiserror::Error;

/// Error type shared by every stage of the pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum WaveError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("non-finite value encountered in {0}")]
    Numeric(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("blow-up at t = {t:.6}: max |v| = {max_abs:.3e}")]
    BlowUp { t: f64, max_abs: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("singular Jacobian (smallest pivot {pivot:.3e})")]
    SingularJacobian { pivot: f64 },

    #[error("flow did not reach any equilibrium by t = {t_max}: nearest distance {distance:.3e}, energy {energy:.6e}")]
    Timeout {
        t_max: f64,
        distance: f64,
        energy: f64,
    },

    #[error("structural error: {0}")]
    Structural(String),

    #[error("Gramian solve stagnated after {iterations} iterations (residual {residual:.3e}); try a longer horizon")]
    Stagnation { iterations: usize, residual: f64 },

    #[error("verification failed: reported residual {reported:.3e}, simulated {simulated:.3e}")]
    Verification { reported: f64, simulated: f64 },

    #[error("neighborhood too large: fixed-point residuals {history:?}")]
    NeighborhoodTooLarge { history: Vec<f64> },

    #[error("state outside local-control radius: distance {distance:.3e} > rho {rho:.3e}")]
    OutsideRadius { distance: f64, rho: f64 },

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("planning error: {0}")]
    Planning(String),

    #[error("execution error in segment {segment}: {reason}")]
    Execution { segment: usize, reason: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for WaveError {
    fn from(err: std::io::Error) -> Self {
        WaveError::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, WaveError>;
