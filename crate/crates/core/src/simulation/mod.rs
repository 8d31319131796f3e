//! Synthetic data generation and the replicated estimator comparison.

mod generator;
mod psi;
mod random;
mod study;

pub use generator::{
    simulate_dataset, simulate_week, SeRule, SimulatedSeason, SimulationTruth, P_HAT_HIGH, P_HAT_LOW,
    REJECTION_BUDGET, RHO_FLOOR,
};
pub use psi::{ar1_prior_draw, psi_prior_predictive, PsiSummary, PSI_QUANTILES};
pub use random::{draw_dirichlet, draw_multinomial, stream_rng};
pub use study::{
    run_study, ReplicateFailure, ReplicateRecord, StudyMetrics, StudyOptions, StudyOutcome, MAX_FAILURE_FRACTION,
};
