//! Causal pre-processing and fairness-regularized gradient boosting.
//!
//! The crate models a binary protected attribute whose causal influence on
//! downstream variables is to be removed before training a classifier.
//! It provides three ways to obtain such "neutralized" data:
//!
//! * simulating a structural causal model twice from common random numbers,
//!   once as-is and once with the protected attribute silenced ([`scm`]);
//! * warping observed descendant columns through group-specific location
//!   models and residual quantiles ([`warp`]);
//! * re-mapping observed descendant columns through conditional empirical
//!   quantiles over discretized parent strata ([`adapt`]).
//!
//! On top of that sit a gradient-boosted-tree learner with a group-disparity
//! penalty ([`boost`]), group-fairness metrics with bootstrap AUC intervals
//! ([`metrics`]), a penalty-path harness that locates the smallest penalty
//! achieving a disparity bound and traces fairness/accuracy along the path
//! ([`tradeoff`]), mortgage-data ingestion ([`hmda`]), and a reproducible
//! multi-iteration study driver ([`study`]).
//!
//! Everything is deterministic given the seeds carried in the various
//! option structs; see [`seeding`] for how independent streams are derived.

pub mod adapt;
pub mod adjacency;
pub mod boost;
pub mod dataset;
pub mod error;
mod glm;
pub mod hmda;
pub mod jsonio;
pub mod metrics;
pub mod scm;
pub mod seeding;
pub mod stats;
pub mod study;
pub mod tradeoff;
pub mod warp;

pub use error::{Error, Result};
