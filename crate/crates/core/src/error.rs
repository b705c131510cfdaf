use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("time {0} is not a grid node")]
    OffGrid(f64),
    #[error("horizon exceeded: requested {requested}, available {available}")]
    Horizon { requested: f64, available: f64 },
    #[error("tail truncation estimate {estimate:.3e} exceeds tolerance {tolerance:.3e}")]
    Truncation { estimate: f64, tolerance: f64 },
    #[error("fBm covariance not positive definite after jitter (H = {h}, n = {n})")]
    NotPositiveDefinite { h: f64, n: usize },
    #[error("solution blew up at t = {t}")]
    BlowUp { t: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("insufficient data: {0}")]
    Insufficient(String),
    #[error("mass outside the histogram box is {0:.3e}; enlarge the box")]
    BoxTooSmall(f64),
    #[error("precondition not met: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Index of `t` on a grid of step `dt`, rejecting times that are not nodes.
pub fn grid_index(t: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidArgument(format!("grid lookup t = {t}, dt = {dt}")));
    }
    let k = (t / dt).round();
    if (k * dt - t).abs() > 1e-9 * dt.max(t) {
        return Err(Error::OffGrid(t));
    }
    Ok(k as usize)
}
