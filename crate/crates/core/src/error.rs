use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("unknown truncation label `{0}` (expected `n1` or `n2`)")]
    UnknownTruncation(String),

    #[error("unknown Fano ordering `{0}` (expected `as_written` or `excitation_conserving`)")]
    UnknownOrdering(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("time step {dt:.3e} too coarse: Γ_max·Δt = {product:.3} exceeds {limit}")]
    StepTooLarge { dt: f64, product: f64, limit: f64 },

    #[error("state invariant violated at step {step}: {what}")]
    StateInvariant { step: usize, what: String },

    #[error("rate eigenvalues are degenerate (|γ+ − γ−| = {gap:.3e} µeV)")]
    DegenerateRates { gap: f64 },

    #[error("time {t:.6e} lies outside the trajectory range [0, {end:.6e}]")]
    OutOfTrajectory { t: f64, end: f64 },

    #[error("trajectory step {step:.3e} exceeds the sampling limit {limit:.3e}")]
    TrajectoryTooCoarse { step: f64, limit: f64 },

    #[error("time {t:.6e} is not on the trajectory grid (step {step:.6e})")]
    OffGrid { t: f64, step: f64 },

    #[error("time integration not converged: tail intensity {tail:.3e} of peak exceeds {limit:.1e}")]
    NotConverged { tail: f64, limit: f64 },

    #[error("ν grid [{lo:.3}, {hi:.3}] µeV is narrower than the required [{need_lo:.3}, {need_hi:.3}]")]
    GridTooNarrow {
        lo: f64,
        hi: f64,
        need_lo: f64,
        need_hi: f64,
    },

    #[error("spectrum value {value:.3e} below tolerance −{tol:.3e} at ν = {nu} µeV, t = {t}")]
    NegativeSpectrum {
        value: f64,
        tol: f64,
        nu: f64,
        t: f64,
    },

    #[error("no peaks found")]
    NoPeaks,
}
