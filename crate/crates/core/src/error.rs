use crate::model::ModeIndex;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid atom configuration: {0}")]
    InvalidAtom(String),

    #[error("frequency {omega} is below the cutoff {cutoff} of {index}")]
    BelowCutoff {
        omega: f64,
        cutoff: f64,
        index: ModeIndex,
    },

    #[error("frequency {omega} is within the guard band of the {index} cutoff {cutoff}")]
    AtCutoffSingularity {
        omega: f64,
        cutoff: f64,
        index: ModeIndex,
    },

    #[error("quadrature did not converge: error estimate {achieved:e} above requested {requested:e}")]
    QuadratureFailure { achieved: f64, requested: f64 },

    #[error("invalid delay problem: {0}")]
    InvalidProblem(String),

    #[error("step {step} exceeds the limit {limit} set by the shortest delay")]
    StepTooLarge { step: f64, limit: f64 },

    #[error("|amplitude| = {modulus} exceeds one at t = {time}")]
    NormViolation { time: f64, modulus: f64 },

    #[error("t_max = {t_max} exceeds the reliable window {horizon} of the k grid")]
    RecurrenceHorizonExceeded { t_max: f64, horizon: f64 },

    #[error("norm drifted by {drift:e} at t = {time}")]
    NormDrift { time: f64, drift: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("engine `{engine}` cannot run this scenario: {reason}")]
    EngineNotApplicable { engine: String, reason: String },

    #[error("{context}: {source}")]
    Scenario {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Wraps an engine error with the name of the run that produced it.
    pub fn in_scenario(self, context: impl Into<String>) -> Self {
        Error::Scenario {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// True for malformed inputs, as opposed to numerical or engine failures.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_) | Error::InvalidGeometry(_) | Error::InvalidAtom(_) => true,
            Error::Scenario { source, .. } => source.is_config(),
            _ => false,
        }
    }
}
