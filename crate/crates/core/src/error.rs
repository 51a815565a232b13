use thiserror::Error;

/// Errors produced by grid construction, field operations, the solver,
/// and the experiment drivers.
#[derive(Debug, Error)]
pub enum KdvError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("derivative order {0} outside supported range 1..=6")]
    UnsupportedOrder(usize),

    #[error("Sobolev index {0} outside supported range 0..=6")]
    UnsupportedSobolevIndex(usize),

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("solution blew up at step {step} (t = {time}): max |eta| = {magnitude:.3e}")]
    Blowup {
        step: usize,
        time: f64,
        magnitude: f64,
    },

    #[error(
        "tail-mass guard violated at t = {time}: edge-band amplitude {ratio:.3e} of peak \
         exceeds {limit:.1e} (domain too small for the solution support)"
    )]
    TailGuard { time: f64, ratio: f64, limit: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("slope fit needs at least 3 points with positive coordinates: {0}")]
    SlopeFit(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, KdvError>;
