use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("fermions cannot both occupy site {site}")]
    PauliExclusion { site: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("sparsity pattern mismatch: {0}")]
    PatternMismatch(String),

    #[error("sample times must be sorted and non-negative")]
    UnsortedSampleTimes,

    #[error("sample time {time} lies outside the horizon [0, {horizon}]")]
    SampleOutsideHorizon { time: f64, horizon: f64 },

    #[error("non-finite amplitude encountered during propagation")]
    NonFinite,

    #[error("dense oracle limited to dimension {limit}, got {dim}")]
    DimensionTooLarge { dim: usize, limit: usize },

    #[error("accumulators cover different sample grids")]
    GridMismatch,

    #[error("noiseless variance vanishes at tau = {tau}")]
    ZeroReferenceVariance { tau: f64 },

    #[error("no sample at tau = {tau}")]
    MissingSample { tau: f64 },
}
