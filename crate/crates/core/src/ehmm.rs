//! The embedded-HMM transition and chain driver.
//!
//! One update builds a pool around every `x_t` (all pools first, fresh each
//! iteration), fills the index-HMM tables, and draws a new index path by
//! forward filtering / backward sampling. The current sequence is the index
//! path sitting at each pool's `j = 0` offset, so it always has positive
//! weight when `pi(x) > 0`.

use std::time::Instant;

use crate::error::{usage, Result};
use crate::index_hmm::{backward_ops, backward_sample, build_tables, forward_pass};
use crate::model::{log_joint, ObsSeq, StateSeq, StateSpaceModel, StateValue};
use crate::pool::{build_pool, Pool, PoolKernel};
use crate::rng::{purpose, RngStream};

/// Settings for an embedded-HMM chain.
#[derive(Clone, Debug)]
pub struct EhmmConfig<P> {
    /// Pool size `K`.
    pub pool_size: usize,
    /// One pool kernel per time step.
    pub kernels: Vec<P>,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// Stream id distinguishing chains that share a seed.
    pub chain: u64,
}

impl<P> EhmmConfig<P> {
    pub fn new(pool_size: usize, kernels: Vec<P>) -> Self {
        EhmmConfig {
            pool_size,
            kernels,
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

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.pool_size == 0 {
            return Err(usage!("pool size K must be >= 1"));
        }
        if self.kernels.len() != n {
            return Err(usage!(
                "{} pool kernels for a sequence of length {n}",
                self.kernels.len()
            ));
        }
        check_schedule(self.iterations, self.burn_in, self.thin)
    }
}

pub(crate) fn check_schedule(iterations: usize, burn_in: usize, thin: usize) -> Result<()> {
    if thin == 0 {
        return Err(usage!("thinning must be >= 1"));
    }
    if burn_in > iterations {
        return Err(usage!("burn-in {burn_in} exceeds iteration count {iterations}"));
    }
    Ok(())
}

/// Everything produced by one embedded-HMM update.
#[derive(Clone, Debug)]
pub struct EhmmStep<S> {
    pub next: StateSeq<S>,
    pub pools: Vec<Pool<S>>,
    /// Selected pool index per time (flat positions into each pool).
    pub path: Vec<usize>,
    /// Inner-loop operations: pool draws, table entries, forward and
    /// backward recursion steps.
    pub ops: u64,
}

/// One embedded-HMM update from `x`, returning pools and bookkeeping.
///
/// Randomness comes from streams derived from `rng` per time step (pool
/// construction) and for the selection, so `rng` itself is not advanced.
pub fn ehmm_step<M, P>(
    model: &M,
    kernels: &[P],
    pool_size: usize,
    x: &StateSeq<M::State>,
    y: &ObsSeq<M::Obs>,
    rng: &RngStream,
) -> Result<EhmmStep<M::State>>
where
    M: StateSpaceModel,
    P: PoolKernel<State = M::State>,
{
    let n = x.len();
    if y.len() != n || kernels.len() != n {
        return Err(usage!(
            "length mismatch: states {n}, observations {}, kernels {}",
            y.len(),
            kernels.len()
        ));
    }
    let pools = (0..n)
        .map(|t| {
            let mut r = rng.derive(&[purpose::POOL, t as u64]);
            build_pool(&kernels[t], &x[t], pool_size, &mut r)
        })
        .collect::<Result<Vec<_>>>()?;
    let tables = build_tables(model, &pools, kernels, y.as_slice())?;

    let current: Vec<usize> = pools.iter().map(Pool::offset).collect();
    if tables.path_log_weight(&current) == f64::NEG_INFINITY {
        return Err(usage!("current sequence has zero posterior density"));
    }

    let msgs = forward_pass(&tables)?;
    let path = backward_sample(&msgs, &tables, &mut rng.derive(&[purpose::SELECT]))?;
    let next = StateSeq::new(
        path.iter()
            .zip(&pools)
            .map(|(&i, pool)| pool.states()[i].clone())
            .collect(),
    )?;
    let ops = (n * (pool_size - 1)) as u64 + tables.build_ops() + msgs.ops() + backward_ops(&tables);
    Ok(EhmmStep { next, pools, path, ops })
}

/// One embedded-HMM update `x -> x'`.
pub fn ehmm_transition<M, P>(
    model: &M,
    cfg: &EhmmConfig<P>,
    x: &StateSeq<M::State>,
    y: &ObsSeq<M::Obs>,
    rng: &RngStream,
) -> Result<StateSeq<M::State>>
where
    M: StateSpaceModel,
    P: PoolKernel<State = M::State>,
{
    if cfg.pool_size == 0 {
        return Err(usage!("pool size K must be >= 1"));
    }
    Ok(ehmm_step(model, &cfg.kernels, cfg.pool_size, x, y, rng)?.next)
}

/// Samples and per-iteration summaries of one chain.
///
/// Per-iteration vectors are indexed by iteration, with entry 0 describing
/// the initial sequence (zero moves, zero ops, zero seconds).
#[derive(Clone, Debug)]
pub struct ChainRecord<S> {
    pub samples: Vec<StateSeq<S>>,
    /// Iteration number (1-based) of each stored sample.
    pub sample_iters: Vec<usize>,
    pub log_joint: Vec<f64>,
    /// Number of time steps whose state changed in each update.
    pub moves: Vec<usize>,
    pub ops: Vec<u64>,
    pub seconds: Vec<f64>,
}

impl<S> ChainRecord<S> {
    pub fn iterations(&self) -> usize {
        self.log_joint.len() - 1
    }
}

/// Number of samples kept for a schedule.
pub fn stored_count(iterations: usize, burn_in: usize, thin: usize) -> usize {
    iterations.saturating_sub(burn_in) / thin
}

/// Run `iterations` updates from `x0`, keeping every `thin`-th state after
/// `burn_in`. `update(i, x)` returns the next state and its op count.
#[allow(clippy::too_many_arguments)]
pub(crate) fn drive_chain<M, F, O>(
    model: &M,
    x0: &StateSeq<M::State>,
    y: &ObsSeq<M::Obs>,
    iterations: usize,
    burn_in: usize,
    thin: usize,
    mut update: F,
    mut observe: O,
) -> Result<ChainRecord<M::State>>
where
    M: StateSpaceModel,
    F: FnMut(usize, &StateSeq<M::State>) -> Result<(StateSeq<M::State>, u64)>,
    O: FnMut(usize, &StateSeq<M::State>),
{
    check_schedule(iterations, burn_in, thin)?;
    let lj0 = log_joint(model, x0, y)?;
    if !lj0.is_finite() {
        return Err(usage!("initial sequence has zero posterior density"));
    }
    let kept = stored_count(iterations, burn_in, thin);
    let mut rec = ChainRecord {
        samples: Vec::with_capacity(kept),
        sample_iters: Vec::with_capacity(kept),
        log_joint: vec![lj0],
        moves: vec![0],
        ops: vec![0],
        seconds: vec![0.0],
    };
    observe(0, x0);
    let mut x = x0.clone();
    for i in 1..=iterations {
        let start = Instant::now();
        let (next, ops) = update(i, &x)?;
        rec.seconds.push(start.elapsed().as_secs_f64());
        rec.moves.push(count_moves(&x, &next));
        rec.ops.push(ops);
        rec.log_joint.push(log_joint(model, &next, y)?);
        x = next;
        observe(i, &x);
        if i > burn_in && (i - burn_in).is_multiple_of(thin) {
            rec.samples.push(x.clone());
            rec.sample_iters.push(i);
        }
    }
    Ok(rec)
}

fn count_moves<S: StateValue>(a: &StateSeq<S>, b: &StateSeq<S>) -> usize {
    a.as_slice().iter().zip(b.as_slice()).filter(|(u, v)| u != v).count()
}

/// Run an embedded-HMM chain from `x0`.
///
/// Iteration `i` draws from streams derived from `(seed, chain)` and `i`, so
/// results depend only on the configuration.
pub fn run_chain<M, P>(
    model: &M,
    cfg: &EhmmConfig<P>,
    x0: &StateSeq<M::State>,
    y: &ObsSeq<M::Obs>,
) -> Result<ChainRecord<M::State>>
where
    M: StateSpaceModel,
    P: PoolKernel<State = M::State>,
{
    run_chain_observed(model, cfg, x0, y, |_, _| {})
}

/// [`run_chain`], calling `observe(i, x)` with the state after every
/// iteration (`i = 0` is the initial sequence), thinned or not.
pub fn run_chain_observed<M, P, O>(
    model: &M,
    cfg: &EhmmConfig<P>,
    x0: &StateSeq<M::State>,
    y: &ObsSeq<M::Obs>,
    observe: O,
) -> Result<ChainRecord<M::State>>
where
    M: StateSpaceModel,
    P: PoolKernel<State = M::State>,
    O: FnMut(usize, &StateSeq<M::State>),
{
    cfg.validate(x0.len())?;
    let base = RngStream::new(cfg.seed, cfg.chain);
    let update = |i: usize, x: &StateSeq<M::State>| {
        let rng = base.derive(&[purpose::CHAIN, i as u64]);
        let step = ehmm_step(model, &cfg.kernels, cfg.pool_size, x, y, &rng)?;
        Ok((step.next, step.ops))
    };
    drive_chain(model, x0, y, cfg.iterations, cfg.burn_in, cfg.thin, update, observe)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FiniteModel;
    use crate::pool::FiniteKernel;

    fn toy() -> (FiniteModel, ObsSeq<usize>) {
        let m = FiniteModel::from_probs(
            vec![0.6, 0.4],
            vec![vec![0.9, 0.1], vec![0.2, 0.8]],
            vec![vec![0.7, 0.3], vec![0.1, 0.9]],
        )
        .unwrap();
        (m, ObsSeq::new(vec![0, 1, 1, 0]).unwrap())
    }

    #[test]
    fn k1_keeps_sequence() {
        let (m, y) = toy();
        let kern = FiniteKernel::new(vec![0.5, 0.5], vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let cfg = EhmmConfig::new(1, vec![kern; 4]).iterations(20);
        let x0 = StateSeq::new(vec![0, 1, 0, 1]).unwrap();
        let rec = run_chain(&m, &cfg, &x0, &y).unwrap();
        assert_eq!(rec.samples.len(), 20);
        assert!(rec.samples.iter().all(|s| *s == x0));
    }

    #[test]
    fn identity_kernels_keep_sequence() {
        let (m, y) = toy();
        let kern = FiniteKernel::identity(vec![0.5, 0.5]).unwrap();
        let cfg = EhmmConfig::new(5, vec![kern; 4]);
        let x0 = StateSeq::new(vec![1, 1, 0, 0]).unwrap();
        for s in 0..20 {
            let next = ehmm_transition(&m, &cfg, &x0, &y, &RngStream::new(s, 0)).unwrap();
            assert_eq!(next, x0);
        }
    }

    #[test]
    fn schedule_bookkeeping() {
        let (m, y) = toy();
        let kern = FiniteKernel::new(vec![0.5, 0.5], vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let x0 = StateSeq::new(vec![0, 0, 0, 0]).unwrap();
        let cfg = EhmmConfig::new(3, vec![kern; 4]).iterations(10).burn_in(3).thin(2);
        let rec = run_chain(&m, &cfg, &x0, &y).unwrap();
        assert_eq!(rec.samples.len(), stored_count(10, 3, 2));
        assert_eq!(rec.sample_iters, vec![5, 7, 9]);
        assert_eq!(rec.log_joint.len(), 11);
        assert!(rec.log_joint.iter().all(|v| v.is_finite()));

        let cfg = cfg.iterations(4).burn_in(4);
        assert!(run_chain(&m, &cfg, &x0, &y).unwrap().samples.is_empty());
        let cfg = cfg.burn_in(5);
        assert!(run_chain(&m, &cfg, &x0, &y).is_err());
    }

    #[test]
    fn chains_are_reproducible() {
        let (m, y) = toy();
        let kern = FiniteKernel::new(vec![0.3, 0.7], vec![vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        let x0 = StateSeq::new(vec![0, 0, 0, 0]).unwrap();
        let cfg = EhmmConfig::new(4, vec![kern; 4]).iterations(50).seed(11);
        let a = run_chain(&m, &cfg, &x0, &y).unwrap();
        let b = run_chain(&m, &cfg, &x0, &y).unwrap();
        assert_eq!(a.samples, b.samples);
        let c = run_chain(&m, &cfg.clone().chain(1), &x0, &y).unwrap();
        assert_ne!(a.samples, c.samples);
    }
}
