//! Command-line front end: config handling, CSV formats and the four
//! subcommands.

pub mod commands;
pub mod config;
pub mod csvio;

pub use commands::{oracle, report, sample, simulate, Report, RESOLVED_CONFIG};
pub use config::{InitRule, PoolKind, ProposalKind, RunConfig, SamplerKind};
