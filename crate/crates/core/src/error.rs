//! Error type shared by the solver layers.

/// Broad class of a failure, used by callers (e.g. the CLI) to map errors to
/// exit codes without matching every variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad input: parameter values, configuration, or call usage.
    Validation,
    /// The computation itself failed: no root, singular system, divergence.
    Numerical,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {message}")]
    InvalidParameter { field: &'static str, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error(
        "branch `{requested}` not available: steady state has {count} root(s) {roots:?}; \
         available branches: {available}"
    )]
    BranchUnavailable {
        requested: &'static str,
        count: usize,
        roots: Vec<f64>,
        available: &'static str,
    },

    #[error(
        "singular response system at probe detuning {omega:.6e} rad/s \
         (condition estimate {condition:.3e}): {context}"
    )]
    Singular {
        omega: f64,
        condition: f64,
        context: &'static str,
    },

    #[error(
        "phase jump {jump:.3} rad across the finite-difference stencil at step {step:.3e} rad/s \
         exceeds pi/2 after unwrapping; retry with a smaller step"
    )]
    StepSize { step: f64, jump: f64 },

    #[error(
        "demodulation did not converge after {windows} windows \
         (last metric {metric:.3e}, tolerance {tolerance:.3e})"
    )]
    NoConvergence {
        windows: u32,
        metric: f64,
        tolerance: f64,
    },

    #[error("time-domain state became non-finite at t = {time:.6e} s")]
    Unstable { time: f64 },

    #[error("sweep point (P_L = {pump_power:.6e} W, U = {kerr:.6e} rad/s) failed: {source}")]
    SweepPoint {
        pump_power: f64,
        kerr: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Exit-code class of this error.
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidParameter { .. } | Error::Config(_) | Error::Usage(_) => {
                ErrorClass::Validation
            }
            Error::SweepPoint { source, .. } => source.class(),
            _ => ErrorClass::Numerical,
        }
    }
}
