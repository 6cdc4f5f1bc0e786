//! Embedded hidden Markov model sampling for non-linear state-space models.
//!
//! An update of the whole hidden sequence proceeds in two phases. First a
//! pool of `K` candidate states is grown around each current state `x_t`
//! using a Markov kernel that leaves a chosen pool density `rho_t`
//! invariant. Then a new sequence is drawn from all `K^n` sequences through
//! the pools, with probability proportional to `pi(x) / prod rho_t(x_t)`,
//! by forward filtering and backward sampling over pool indexes. The update
//! leaves the posterior `pi` invariant.
//!
//! ```
//! use ehmm::prelude::*;
//!
//! let params = TanhModelParams { sigma: 2.5, eta: 2.5, tau: 0.4 };
//! let model = make_tanh_model(params).unwrap();
//! let (_, y) = model.simulate(50, &mut RngStream::new(1, 0)).unwrap();
//!
//! let kernels = gauss_pool_kernels(PoolStrategy::Fixed { mu: 0.0, nu: 1.0 }, &y, &params, 0.0).unwrap();
//! let cfg = EhmmConfig::new(10, kernels).iterations(20).seed(7);
//! let x0 = StateSeq::new(y.as_slice().to_vec()).unwrap();
//! let rec = run_chain(&model, &cfg, &x0, &y).unwrap();
//! assert_eq!(rec.samples.len(), 20);
//! ```
//!
//! The `book/` directory of the repository has a guide; its code listings
//! are compiled and run as doctests of this crate.

// NaN-rejecting `!(x > 0.0)` checks and index loops over parallel arrays are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod baselines;
pub mod cli;
pub mod diagnostics;
pub mod ehmm;
mod error;
pub mod index_hmm;
pub mod math;
pub mod model;
pub mod pool;
pub mod rng;
pub mod tanh;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::baselines::{grid_oracle_marginals, run_metropolis, GridSpec, MetropolisConfig, ScalarProposal};
    pub use crate::diagnostics::{autocorr, oracle_error, sign_switch_count, trace_at_time};
    pub use crate::ehmm::{ehmm_transition, run_chain, ChainRecord, EhmmConfig};
    pub use crate::index_hmm::{backward_sample, brute_force_path_dist, build_tables, forward_pass, IndexHmmTables};
    pub use crate::model::{log_joint, log_posterior_unnorm, FiniteModel, ObsSeq, StateSeq, StateSpaceModel};
    pub use crate::pool::{build_pool, FiniteKernel, Pool, PoolKernel};
    pub use crate::rng::RngStream;
    pub use crate::tanh::{gauss_pool_kernels, make_tanh_model, PoolStrategy, TanhModelParams};
    pub use crate::Error;
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/pools.md")]
    mod pools {}
    #[doc = include_str!("../../../book/src/index_hmm.md")]
    mod index_hmm {}
    #[doc = include_str!("../../../book/src/update.md")]
    mod update {}
    #[doc = include_str!("../../../book/src/tanh.md")]
    mod tanh {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/diagnostics.md")]
    mod diagnostics {}
    #[doc = include_str!("../../../book/src/rng.md")]
    mod rng {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
