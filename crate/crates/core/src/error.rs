use thiserror::Error;

/// Errors produced anywhere in the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(
        "static instability: effective stiffness {stiffness:e} <= 0 (Coulomb softening exceeds the mechanical stiffness of MR1)"
    )]
    StaticInstability { stiffness: f64 },

    #[error("MR2 susceptibility pole at delta = {delta:e}; use gamma2 > 0")]
    SusceptibilityPole { delta: f64 },

    #[error("singular probe response at delta = {delta:e}")]
    SingularResponse { delta: f64 },

    #[error("near-pole linear system at delta = {delta:e} (condition estimate {condition:e})")]
    NearPole { delta: f64, condition: f64 },

    #[error("phase undefined at delta = {delta:e}: |t_p| = {magnitude:e}")]
    UndefinedPhase { delta: f64, magnitude: f64 },

    #[error("detuning grid too coarse between delta = {lo:e} and delta = {hi:e}")]
    GridTooCoarse { lo: f64, hi: f64 },

    #[error(
        "integration step underflow at t = {time:e}; reduce the kappa/omega1 separation or use dimensionless mode"
    )]
    StepUnderflow { time: f64 },

    #[error("trajectory diverged at t = {time:e}")]
    Divergence { time: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    /// Short whitespace-free token used for error markers in sweep output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid-input",
            Error::StaticInstability { .. } => "static-instability",
            Error::SusceptibilityPole { .. } => "susceptibility-pole",
            Error::SingularResponse { .. } => "singular-response",
            Error::NearPole { .. } => "near-pole",
            Error::UndefinedPhase { .. } => "undefined-phase",
            Error::GridTooCoarse { .. } => "grid-too-coarse",
            Error::StepUnderflow { .. } => "step-underflow",
            Error::Divergence { .. } => "divergence",
            Error::InsufficientData(_) => "insufficient-data",
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
        }
    }

    /// True for errors that come from the physics (instabilities, poles,
    /// singular responses) rather than from malformed input.
    pub fn is_physics(&self) -> bool {
        !matches!(
            self,
            Error::InvalidInput(_) | Error::Parse { .. } | Error::Io { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
