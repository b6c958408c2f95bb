use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cannot normalize the zero state")]
    ZeroState,

    #[error("no photon present in spatial mode group {0}")]
    NoPhoton(&'static str),

    #[error("measurement outcome has zero probability")]
    ImpossibleOutcome,

    #[error("state has odd total photon number on {0}; not a pair state")]
    NotPairState(String),

    #[error("state has no component with one photon in each spatial mode group")]
    NoTwoPhotonComponent,

    #[error("truncation overflow: {context} (tail weight {tail:.3e} exceeds tolerance {tol:.3e}); increase n_max or reduce the gain")]
    TruncationOverflow {
        context: String,
        tail: f64,
        tol: f64,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
