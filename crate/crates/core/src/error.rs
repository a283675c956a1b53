use thiserror::Error;

/// Errors shared across the simulation crate.
#[derive(Debug, Error)]
pub enum CoreError {
    /// A size, duration, tolerance or count that must be positive was not.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The coupling ratio sits on the band-touching point where the winding
    /// number is undefined.
    #[error("couplings are critical (|omega_b/omega_a - 1| < {tolerance}): winding is undefined")]
    CriticalPoint { tolerance: f64 },

    /// Population reached the open ends of the chain beyond the configured
    /// guard threshold, so bulk observables are no longer trustworthy.
    #[error("edge occupation {occupation:.3e} exceeded guard {guard:.3e} at t = {time:.6} s")]
    EdgeLeakage {
        occupation: f64,
        guard: f64,
        time: f64,
    },

    /// A root or fixed-point search ran out of iterations.
    #[error("search did not converge: {0}")]
    NoConvergence(String),

    /// An ensemble member returned an error; the index identifies the draw.
    #[error("realization {index} failed: {source}")]
    Realization {
        index: usize,
        #[source]
        source: Box<CoreError>,
    },
}

pub type Result<T> = std::result::Result<T, CoreError>;
