use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("root bracket escaped the search window: {0}")]
    DomainEscape(String),

    #[error("near-singular derivative: {0}")]
    NearSingular(String),

    #[error("degenerate kernel: {0}")]
    DegenerateKernel(String),

    #[error("kernel construction bug: mass {mass} outside [{lo}, {hi}] at y = {y}, n = {n}")]
    KernelMass { y: f64, n: usize, mass: f64, lo: f64, hi: f64 },

    #[error("resolution too coarse: {0}")]
    Resolution(String),

    #[error("insufficient resolution: {0}")]
    InsufficientResolution(String),

    #[error("grid window too small: {0}")]
    WindowTooSmall(String),

    #[error("path blow-up at t = {time}: state {state} ({events} events logged)")]
    BlowUp { time: f64, state: f64, events: usize },

    #[error("evolution diverged at step {step}")]
    Divergence { step: usize },

    #[error("run {run}: {source}")]
    InRun { run: u64, source: Box<Error> },
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        if let Error::InRun { source, .. } = self {
            return source.is_numerical();
        }
        matches!(
            self,
            Error::DomainEscape(_)
                | Error::NearSingular(_)
                | Error::KernelMass { .. }
                | Error::Resolution(_)
                | Error::InsufficientResolution(_)
                | Error::WindowTooSmall(_)
                | Error::BlowUp { .. }
                | Error::Divergence { .. }
        )
    }
}
