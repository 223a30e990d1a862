use thiserror::Error;

use crate::scope::Alliance;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid cost specification: {0}")]
    InvalidSpec(String),

    #[error("invalid scope bounds: lo = {lo}, hi = {hi}")]
    InvalidBounds { lo: f64, hi: f64 },

    #[error("empty alliance")]
    EmptyAlliance,

    #[error("no consistent scope profile for alliance {alliance}: {detail}")]
    NoConsistentProfile { alliance: Alliance, detail: String },

    #[error("while solving sub-alliance {alliance}: {source}")]
    SubAlliance {
        alliance: Alliance,
        #[source]
        source: Box<Error>,
    },

    #[error("non-unique argmax in greedy sequencing ({0}); the maximiser must be unique for well-ordered costs")]
    NonUniqueArgmax(String),

    #[error("infeasible chain: {0}")]
    InfeasibleChain(String),

    #[error("costs are not proportional: {0}")]
    NotProportional(String),

    #[error("team of {size} agents exceeds enumeration cap {cap}")]
    EnumerationCap { size: usize, cap: usize },

    #[error("invalid simulation config: {0}")]
    InvalidSimConfig(String),

    #[error("{censored} of {paths} paths hit the horizon guard t_max = {t_max}")]
    Censored { censored: usize, paths: usize, t_max: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn in_alliance(self, alliance: &Alliance) -> Error {
        match self {
            e @ Error::SubAlliance { .. } => e,
            e => Error::SubAlliance {
                alliance: alliance.clone(),
                source: Box::new(e),
            },
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
