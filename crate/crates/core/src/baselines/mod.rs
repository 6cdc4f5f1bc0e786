//! Reference samplers and exact answers to compare the embedded HMM against.

pub mod grid;
pub mod metropolis;

pub use grid::{grid_oracle_marginals, GridOracle, GridSpec};
pub use metropolis::{
    metropolis_sweep, run_metropolis, run_metropolis_observed, MetropolisConfig, Proposal, ScalarProposal,
};
