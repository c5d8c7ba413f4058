use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("sample is empty")]
    EmptySample,

    /// Every observed element is a singleton, so the unseen-mass estimate is 1
    /// and the correction factor `1 / (1 - P0)` is unbounded.
    #[error("degenerate sample: all {singletons} of {observed} observed positions are singletons")]
    DegenerateSample { observed: u64, singletons: u64 },

    #[error("budget of {0} units cannot be split between sketch and reservoir (need at least 2)")]
    InfeasibleBudget(u64),

    #[error("all {0} trials produced a degenerate sample")]
    AllTrialsDegenerate(u32),

    #[error("Good-Turing frequency for i = {0} needs uncapped counts")]
    CountsCapped(u32),

    #[error("invalid register count {0}: must be a power of two in [16, 65536]")]
    InvalidRegisterCount(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
