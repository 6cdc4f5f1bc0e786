//! Single-site Metropolis-Hastings: each sweep visits `t = 0..n` in order
//! and updates `x_t` alone, recomputing only the factors that touch it.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::ehmm::{check_schedule, drive_chain, ChainRecord};
use crate::error::{numeric, usage, Result};
use crate::math::normal_log_pdf;
use crate::model::{ObsSeq, StateSeq, StateSpaceModel};
use crate::rng::{purpose, RngStream};

/// A proposal for one state.
pub trait Proposal<S>: Sync {
    fn propose<R: Rng + ?Sized>(&self, current: &S, rng: &mut R) -> S;
    /// `log q(current | proposed) - log q(proposed | current)`.
    fn log_hastings(&self, current: &S, proposed: &S) -> f64;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScalarProposal {
    /// Draw `x'` from `N(mean, sd^2)` regardless of `x`.
    Independence { mean: f64, sd: f64 },
    /// `x' = x + N(0, sd^2)`.
    RandomWalk { sd: f64 },
}

impl Default for ScalarProposal {
    fn default() -> Self {
        ScalarProposal::Independence { mean: 0.0, sd: 1.0 }
    }
}

impl Proposal<f64> for ScalarProposal {
    fn propose<R: Rng + ?Sized>(&self, current: &f64, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        match *self {
            ScalarProposal::Independence { mean, sd } => mean + sd * z,
            ScalarProposal::RandomWalk { sd } => current + sd * z,
        }
    }

    fn log_hastings(&self, current: &f64, proposed: &f64) -> f64 {
        match *self {
            ScalarProposal::Independence { mean, sd } => {
                normal_log_pdf(*current, mean, sd) - normal_log_pdf(*proposed, mean, sd)
            }
            ScalarProposal::RandomWalk { .. } => 0.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MetropolisConfig<P> {
    pub proposal: P,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub chain: u64,
}

impl<P> MetropolisConfig<P> {
    pub fn new(proposal: P) -> Self {
        MetropolisConfig {
            proposal,
            iterations: 1,
            burn_in: 0,
            thin: 1,
            seed: 0,
            chain: 0,
        }
    }

    pub fn iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn thin(mut self, thin: usize) -> Self {
        self.thin = thin;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn chain(mut self, chain: u64) -> Self {
        self.chain = chain;
        self
    }
}

impl ScalarProposal {
    pub fn validate(&self) -> Result<()> {
        let sd = match *self {
            ScalarProposal::Independence { sd, .. } | ScalarProposal::RandomWalk { sd } => sd,
        };
        if !(sd.is_finite() && sd > 0.0) {
            return Err(usage!("proposal sd must be positive, got {sd}"));
        }
        Ok(())
    }
}

/// Log of the factors of the joint density that involve `x_t = v`.
fn local_log_density<M: StateSpaceModel>(model: &M, x: &[M::State], y: &[M::Obs], t: usize, v: &M::State) -> f64 {
    let prior = if t == 0 {
        model.log_init(v)
    } else {
        model.log_trans(&x[t - 1], v)
    };
    let next = if t + 1 < x.len() {
        model.log_trans(v, &x[t + 1])
    } else {
        0.0
    };
    prior + next + model.log_emit(v, &y[t])
}

/// One sweep over all times. Returns the new sequence and the number of
/// accepted proposals.
pub fn metropolis_sweep<M, P, R>(
    model: &M,
    cfg: &MetropolisConfig<P>,
    x: &StateSeq<M::State>,
    y: &ObsSeq<M::Obs>,
    rng: &mut R,
) -> Result<(StateSeq<M::State>, usize)>
where
    M: StateSpaceModel,
    P: Proposal<M::State>,
    R: Rng + ?Sized,
{
    if x.len() != y.len() {
        return Err(usage!("state length {} != observation length {}", x.len(), y.len()));
    }
    let mut cur = x.as_slice().to_vec();
    let ys = y.as_slice();
    let mut accepted = 0;
    for t in 0..cur.len() {
        let prop = cfg.proposal.propose(&cur[t], rng);
        let new = local_log_density(model, &cur, ys, t, &prop);
        let old = local_log_density(model, &cur, ys, t, &cur[t]);
        let log_ratio = if prop == cur[t] {
            0.0
        } else {
            new - old + cfg.proposal.log_hastings(&cur[t], &prop)
        };
        if log_ratio.is_nan() {
            return Err(numeric!("Metropolis log acceptance ratio is NaN at t={t}"));
        }
        let u: f64 = rng.random();
        if log_ratio >= 0.0 || u.ln() < log_ratio {
            cur[t] = prop;
            accepted += 1;
        }
    }
    Ok((StateSeq::new(cur)?, accepted))
}

/// Run `cfg.iterations` sweeps from `x0`.
pub fn run_metropolis<M, P>(
    model: &M,
    cfg: &MetropolisConfig<P>,
    x0: &StateSeq<M::State>,
    y: &ObsSeq<M::Obs>,
) -> Result<ChainRecord<M::State>>
where
    M: StateSpaceModel,
    P: Proposal<M::State>,
{
    run_metropolis_observed(model, cfg, x0, y, |_, _| {})
}

/// [`run_metropolis`] with a per-iteration observer, as in
/// [`crate::ehmm::run_chain_observed`].
pub fn run_metropolis_observed<M, P, O>(
    model: &M,
    cfg: &MetropolisConfig<P>,
    x0: &StateSeq<M::State>,
    y: &ObsSeq<M::Obs>,
    observe: O,
) -> Result<ChainRecord<M::State>>
where
    M: StateSpaceModel,
    P: Proposal<M::State>,
    O: FnMut(usize, &StateSeq<M::State>),
{
    check_schedule(cfg.iterations, cfg.burn_in, cfg.thin)?;
    let base = RngStream::new(cfg.seed, cfg.chain);
    let ops = 3 * x0.len() as u64;
    let update = |i: usize, x: &StateSeq<M::State>| {
        let mut rng = base.derive(&[purpose::METROPOLIS, i as u64]);
        let (next, _) = metropolis_sweep(model, cfg, x, y, &mut rng)?;
        Ok((next, ops))
    };
    drive_chain(model, x0, y, cfg.iterations, cfg.burn_in, cfg.thin, update, observe)
}
