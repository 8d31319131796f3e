//! Propagating genetic stock identification uncertainty from the sample to
//! the population, and estimating total escapement in genetic
//! mark-recapture studies.
//!
//! The crate is organised bottom-up:
//!
//! - [`composition`] and [`dataset`]: simplex types and validated seasons.
//! - [`calibration`]: the plug-in Dirichlet concentration per week.
//! - [`estimators`]: method-of-moments escapement and variance estimators.
//! - [`inference`]: the Metropolis-within-Gibbs sampler for RDM and MMD.
//! - [`simulation`]: the synthetic-data generator and study harness.

pub mod calibration;
pub mod composition;
pub mod dataset;
pub mod error;
pub mod estimators;
pub mod inference;
pub mod method;
pub mod simulation;

pub use composition::{close_composition, Composition, CompositionEstimate, LatentCounts};
pub use dataset::{validate_dataset, GmrDataset};
pub use error::{Error, Result};
pub use method::{Likelihood, Method, Prior};
