//! Distinct-count estimation for streams that are only partially observed.
//!
//! A stream `X` is thinned by Bernoulli sampling into `Y`. The number of
//! distinct elements of `Y` is estimated with a HyperLogLog sketch and then
//! scaled by `1 / (1 - P0)`, where `P0` is the Good-Turing estimate of the
//! unseen mass: the fraction of singletons in `Y`. That fraction is either
//! tallied exactly, or estimated from a bounded reservoir of positions of `Y`
//! when memory must stay bounded.
//!
//! The crate also carries the closed-form variance of both estimators, the
//! storage-budget optimizer built on them, and a Monte-Carlo harness for
//! synthetic streams.

pub mod analysis;
pub mod error;
pub mod estimators;
pub mod goodturing;
pub mod sampling;
pub mod sim;
pub mod sketch;

pub use analysis::{BudgetSplit, PoissonMode, UnseenMoments};
pub use error::{Error, Result};
pub use estimators::{
    Algorithm, Algorithm1, Algorithm2, EstimateReport, NaiveEstimator, Pipeline, PipelineConfig,
    StorageUnits,
};
pub use goodturing::SampleSummary;
pub use sampling::{BernoulliSampler, ReservoirSubsample};
pub use sim::{FrequencyModel, TrialConfig, TrialResult};
pub use sketch::{hash_element, hash_u64, ElementHash, HllSketch};
