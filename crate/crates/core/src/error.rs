use thiserror::Error;

/// Errors raised by the herding engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("singular configuration: points {0} and {1} coincide")]
    SingularConfiguration(usize, usize),

    #[error("solver did not converge after {iterations} iterations (gradient norm {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("degenerate point set: {0}")]
    DegenerateConfiguration(String),

    #[error("no defender count up to {cap} satisfies the edge-length limit")]
    BudgetExhausted { cap: usize },

    #[error("inconsistent mesh: longest hemispherical edge {hemisphere_max} is not below the limit {limit}")]
    InconsistentMesh { hemisphere_max: f64, limit: f64 },

    #[error("coincident points: orientation is undefined")]
    CoincidentPoints,

    #[error("operation requires a closed net")]
    NotClosed,

    #[error("gathering interval is empty: attackers at distance {distance} are too close")]
    InfeasibleGathering { distance: f64 },

    #[error("target acceleration demand {demand} exceeds actuation limit {limit}")]
    InfeasibleMargin { demand: f64, limit: f64 },

    #[error("defenders {0} and {1} are co-located")]
    DegenerateDefenders(usize, usize),

    #[error("direction (theta={theta}, phi={phi}): {source}")]
    Direction {
        theta: f64,
        phi: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid scenario: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn require(cond: bool, name: &'static str, reason: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, reason: reason() })
    }
}
