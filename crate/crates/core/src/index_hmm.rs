//! The embedded HMM over pool indexes.
//!
//! Given pools `C_0, ..., C_{n-1}` of size `K`, a sequence of indexes
//! `(k_0, ..., k_{n-1})` picks the states `x_t = C_t[k_t]` and has weight
//!
//! ```text
//! P(x_0) * prod_{t>=1} P(x_t | x_{t-1}) * prod_t P(y_t | x_t) / rho_t(x_t)
//! ```
//!
//! This is the posterior of a finite HMM on `0..K`, so an index sequence can
//! be drawn exactly by forward filtering and backward sampling in `O(n K^2)`.
//! Transition rows restricted to a pool do not sum to one in general; the
//! forward pass handles them as unnormalized weights.

use rand::Rng;

use crate::error::{domain, numeric, usage, Error, Result};
use crate::math::{exp_normalize_max, log_sum_exp, sample_categorical};
use crate::model::StateSpaceModel;
use crate::pool::{Pool, PoolKernel};

/// Log weight tables of the embedded HMM.
///
/// The path weight of `(k_0, ..., k_{n-1})` is
/// `log_init[k_0] + sum_{t>=1} (log_trans(t)[k_{t-1}, k_t] + log_w(t)[k_t])`;
/// `log_init` already includes `log_w(0)`.
#[derive(Clone, Debug)]
pub struct IndexHmmTables {
    n: usize,
    k: usize,
    log_init: Vec<f64>,
    /// `(n - 1)` row-major `K x K` blocks; block `t - 1` holds step `t`.
    log_trans: Vec<f64>,
    log_w: Vec<f64>,
    build_ops: u64,
}

fn reject_bad(v: &[f64], what: &str) -> Result<()> {
    if let Some(x) = v.iter().find(|x| x.is_nan() || **x == f64::INFINITY) {
        return Err(numeric!("{what} contains {x}"));
    }
    Ok(())
}

impl IndexHmmTables {
    /// Assemble tables from raw parts. `log_prior[k]` is the initial-state
    /// term only; `log_w` holds `n * K` emission-minus-pool terms (time-major)
    /// and `log_trans` holds `(n - 1) * K * K` transition terms.
    pub fn new(k: usize, log_prior: Vec<f64>, log_trans: Vec<f64>, log_w: Vec<f64>) -> Result<Self> {
        if k == 0 || log_prior.len() != k || log_w.is_empty() || !log_w.len().is_multiple_of(k) {
            return Err(usage!("table dimensions inconsistent with K = {k}"));
        }
        let n = log_w.len() / k;
        if log_trans.len() != (n - 1) * k * k {
            return Err(usage!(
                "expected {} transition entries, got {}",
                (n - 1) * k * k,
                log_trans.len()
            ));
        }
        reject_bad(&log_prior, "initial table")?;
        reject_bad(&log_trans, "transition table")?;
        reject_bad(&log_w, "weight table")?;
        let log_init = log_prior.iter().zip(&log_w[..k]).map(|(p, w)| p + w).collect();
        Ok(IndexHmmTables {
            n,
            k,
            log_init,
            log_trans,
            log_w,
            build_ops: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn log_init(&self) -> &[f64] {
        &self.log_init
    }

    /// Emission-minus-pool log weights at time `t`.
    pub fn log_w(&self, t: usize) -> &[f64] {
        &self.log_w[t * self.k..(t + 1) * self.k]
    }

    /// Row-major `K x K` transition block into time `t >= 1`.
    pub fn log_trans_block(&self, t: usize) -> &[f64] {
        let kk = self.k * self.k;
        &self.log_trans[(t - 1) * kk..t * kk]
    }

    #[inline]
    pub fn log_trans(&self, t: usize, from: usize, to: usize) -> f64 {
        self.log_trans[(t - 1) * self.k * self.k + from * self.k + to]
    }

    /// Inner-loop operations spent building the tables.
    pub fn build_ops(&self) -> u64 {
        self.build_ops
    }

    /// Log weight of one index path.
    pub fn path_log_weight(&self, path: &[usize]) -> f64 {
        debug_assert_eq!(path.len(), self.n);
        let mut w = self.log_init[path[0]];
        for t in 1..self.n {
            w += self.log_trans(t, path[t - 1], path[t]) + self.log_w(t)[path[t]];
        }
        w
    }
}

/// Build the embedded-HMM tables for pools drawn around the current sequence.
pub fn build_tables<M, P>(model: &M, pools: &[Pool<M::State>], kernels: &[P], y: &[M::Obs]) -> Result<IndexHmmTables>
where
    M: StateSpaceModel,
    P: PoolKernel<State = M::State>,
{
    let n = pools.len();
    if n == 0 || kernels.len() != n || y.len() != n {
        return Err(usage!(
            "need one pool, kernel and observation per time (pools {n}, kernels {}, obs {})",
            kernels.len(),
            y.len()
        ));
    }
    let k = pools[0].len();
    if pools.iter().any(|p| p.len() != k) {
        return Err(usage!("all pools must have the same size"));
    }
    let mut ops = 0u64;
    let mut log_w = Vec::with_capacity(n * k);
    for (t, (pool, kernel)) in pools.iter().zip(kernels).enumerate() {
        for x in pool.states() {
            let lr = kernel.log_rho(x);
            if lr.is_nan() {
                return Err(numeric!("pool density is NaN at t={t}"));
            }
            if !lr.is_finite() {
                return Err(domain!("pool density at t={t} does not support pool state {x:?}"));
            }
            let le = model.log_emit(x, &y[t]);
            if le.is_nan() {
                return Err(numeric!("emission log-density is NaN at t={t}"));
            }
            log_w.push(le - lr);
        }
        ops += k as u64;
    }
    let mut log_prior = Vec::with_capacity(k);
    for x in pools[0].states() {
        let v = model.log_init(x);
        if v.is_nan() {
            return Err(numeric!("initial log-density is NaN"));
        }
        log_prior.push(v);
    }
    let mut log_trans = Vec::with_capacity((n - 1) * k * k);
    for t in 1..n {
        for prev in pools[t - 1].states() {
            for x in pools[t].states() {
                let v = model.log_trans(prev, x);
                if v.is_nan() {
                    return Err(numeric!("transition log-density is NaN at t={t}"));
                }
                log_trans.push(v);
            }
        }
        ops += (k * k) as u64;
    }
    let mut tables = IndexHmmTables::new(k, log_prior, log_trans, log_w)?;
    tables.build_ops = ops;
    Ok(tables)
}

/// Normalized filtering distributions over pool indexes.
#[derive(Clone, Debug)]
pub struct ForwardMessages {
    k: usize,
    probs: Vec<f64>,
    log_norms: Vec<f64>,
    log_total: f64,
    ops: u64,
}

impl ForwardMessages {
    pub fn n(&self) -> usize {
        self.log_norms.len()
    }

    /// Filtered distribution over indexes at time `t`; sums to one.
    pub fn message(&self, t: usize) -> &[f64] {
        &self.probs[t * self.k..(t + 1) * self.k]
    }

    /// Log normalizer absorbed at each step.
    pub fn log_norms(&self) -> &[f64] {
        &self.log_norms
    }

    /// Log of the sum of all path weights.
    pub fn log_total(&self) -> f64 {
        self.log_total
    }

    pub fn ops(&self) -> u64 {
        self.ops
    }
}

fn normalize_into(t: usize, log_a: &[f64], scratch: &mut Vec<f64>, probs: &mut Vec<f64>) -> Result<f64> {
    let max = exp_normalize_max(log_a, scratch);
    if max == f64::NEG_INFINITY {
        return Err(Error::ImpossibleUpdate { t });
    }
    let s: f64 = scratch.iter().sum();
    probs.extend(scratch.iter().map(|p| p / s));
    Ok(max + s.ln())
}

/// Forward filtering with per-step normalization.
pub fn forward_pass(tables: &IndexHmmTables) -> Result<ForwardMessages> {
    let (n, k) = (tables.n, tables.k);
    let mut probs = Vec::with_capacity(n * k);
    let mut log_norms = Vec::with_capacity(n);
    let mut scratch = Vec::with_capacity(k);
    let mut ops = 0u64;

    log_norms.push(normalize_into(0, &tables.log_init, &mut scratch, &mut probs)?);

    let mut log_prev = vec![0.0; k];
    let mut log_a = vec![0.0; k];
    let mut terms = vec![0.0; k];
    for t in 1..n {
        for (lp, p) in log_prev.iter_mut().zip(&probs[(t - 1) * k..t * k]) {
            *lp = p.ln();
        }
        let block = tables.log_trans_block(t);
        let w = tables.log_w(t);
        for to in 0..k {
            for from in 0..k {
                terms[from] = log_prev[from] + block[from * k + to];
            }
            log_a[to] = log_sum_exp(&terms) + w[to];
        }
        ops += (k * k) as u64;
        log_norms.push(normalize_into(t, &log_a, &mut scratch, &mut probs)?);
    }
    let log_total = log_norms.iter().sum();
    Ok(ForwardMessages {
        k,
        probs,
        log_norms,
        log_total,
        ops,
    })
}

/// Draw an index sequence with probability proportional to its path weight.
pub fn backward_sample<R: Rng + ?Sized>(
    msgs: &ForwardMessages,
    tables: &IndexHmmTables,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let (n, k) = (tables.n, tables.k);
    if msgs.n() != n || msgs.k != k {
        return Err(usage!("forward messages do not match the tables"));
    }
    let mut path = vec![0usize; n];
    path[n - 1] = sample_categorical(msgs.message(n - 1), rng);
    let mut log_w = vec![0.0; k];
    let mut scratch = Vec::with_capacity(k);
    for t in (0..n - 1).rev() {
        let next = path[t + 1];
        for (j, (lw, p)) in log_w.iter_mut().zip(msgs.message(t)).enumerate() {
            *lw = p.ln() + tables.log_trans(t + 1, j, next);
        }
        if exp_normalize_max(&log_w, &mut scratch) == f64::NEG_INFINITY {
            return Err(Error::ImpossibleUpdate { t });
        }
        path[t] = sample_categorical(&scratch, rng);
    }
    Ok(path)
}

/// Operations performed by [`backward_sample`] on tables of this shape.
pub fn backward_ops(tables: &IndexHmmTables) -> u64 {
    ((tables.n - 1) * tables.k) as u64 + tables.k as u64
}

/// Exact distribution over all `K^n` index paths, by enumeration.
#[derive(Clone, Debug)]
pub struct PathDist {
    n: usize,
    k: usize,
    log_z: f64,
    probs: Vec<f64>,
}

/// Largest `K^n` that [`brute_force_path_dist`] will enumerate.
pub const MAX_ENUMERATED_PATHS: usize = 1_000_000;

impl PathDist {
    /// Probability of every path, indexed by [`PathDist::encode`].
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Log of the sum of all path weights.
    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    /// Path code with `k_0` as the most significant base-`K` digit.
    pub fn encode(&self, path: &[usize]) -> usize {
        path.iter().fold(0, |acc, &i| acc * self.k + i)
    }

    pub fn decode(&self, mut code: usize) -> Vec<usize> {
        let mut path = vec![0; self.n];
        for slot in path.iter_mut().rev() {
            *slot = code % self.k;
            code /= self.k;
        }
        path
    }

    /// Per-time marginal distributions over indexes.
    pub fn marginals(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.k]; self.n];
        for (code, p) in self.probs.iter().enumerate() {
            for (t, i) in self.decode(code).into_iter().enumerate() {
                out[t][i] += p;
            }
        }
        out
    }
}

pub fn brute_force_path_dist(tables: &IndexHmmTables) -> Result<PathDist> {
    let (n, k) = (tables.n, tables.k);
    let count = u32::try_from(n)
        .ok()
        .and_then(|n| k.checked_pow(n))
        .filter(|&c| c <= MAX_ENUMERATED_PATHS)
        .ok_or_else(|| usage!("K^n too large to enumerate (K={k}, n={n})"))?;
    let mut dist = PathDist {
        n,
        k,
        log_z: 0.0,
        probs: Vec::new(),
    };
    let log_w: Vec<f64> = (0..count)
        .map(|code| tables.path_log_weight(&dist.decode(code)))
        .collect();
    let log_z = log_sum_exp(&log_w);
    if log_z == f64::NEG_INFINITY {
        return Err(Error::ImpossibleUpdate { t: 0 });
    }
    dist.log_z = log_z;
    dist.probs = log_w.iter().map(|w| (w - log_z).exp()).collect();
    Ok(dist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn example_2x2() -> IndexHmmTables {
        let l = |p: f64| p.ln();
        IndexHmmTables::new(2, vec![l(0.5), l(0.5)], vec![l(0.5); 4], vec![0.0, 0.0, l(0.8), l(0.2)]).unwrap()
    }

    #[test]
    fn forward_two_step_example() {
        let msgs = forward_pass(&example_2x2()).unwrap();
        assert_eq!(msgs.message(0), &[0.5, 0.5]);
        let last = msgs.message(1);
        assert!((last[0] - 0.8).abs() < 1e-15);
        assert!((last[1] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn path_probs_two_ways() {
        // enumeration vs. the chain of forward normalizers
        let tables = example_2x2();
        let dist = brute_force_path_dist(&tables).unwrap();
        let msgs = forward_pass(&tables).unwrap();
        assert!((dist.log_z() - msgs.log_total()).abs() < 1e-12);
        for code in 0..4 {
            let path = dist.decode(code);
            let p = (tables.path_log_weight(&path) - msgs.log_total()).exp();
            assert!((dist.probs()[code] - p).abs() < 1e-12);
        }
        // by hand: each path is 0.25 * (0.8 or 0.2)
        let expect = [0.4, 0.1, 0.4, 0.1];
        for (p, e) in dist.probs().iter().zip(expect) {
            assert!((p - e).abs() < 1e-12);
        }
    }

    #[test]
    fn single_time_step() {
        let l = |p: f64| p.ln();
        let tables = IndexHmmTables::new(2, vec![l(0.8), l(0.2)], vec![], vec![0.0, 0.0]).unwrap();
        let msgs = forward_pass(&tables).unwrap();
        assert!((msgs.message(0)[0] - 0.8).abs() < 1e-15);
        let mut rng = RngStream::new(4, 0);
        let hits = (0..20_000)
            .filter(|_| backward_sample(&msgs, &tables, &mut rng).unwrap()[0] == 0)
            .count();
        let freq = hits as f64 / 20_000.0;
        assert!((freq - 0.8).abs() < 4.0 * (0.16f64 / 20_000.0).sqrt());
    }

    #[test]
    fn k1_is_trivial() {
        let tables = IndexHmmTables::new(1, vec![-1.0], vec![-2.0, -3.0], vec![0.5, 0.1, 0.2]).unwrap();
        let msgs = forward_pass(&tables).unwrap();
        for t in 0..3 {
            assert_eq!(msgs.message(t), &[1.0]);
        }
        let path = backward_sample(&msgs, &tables, &mut RngStream::new(0, 0)).unwrap();
        assert_eq!(path, vec![0, 0, 0]);
        let dist = brute_force_path_dist(&tables).unwrap();
        assert_eq!(dist.probs(), &[1.0]);
    }

    #[test]
    fn equal_weights_give_uniform_paths() {
        let tables = IndexHmmTables::new(3, vec![0.0; 3], vec![-0.7; 18], vec![0.3; 9]).unwrap();
        let dist = brute_force_path_dist(&tables).unwrap();
        for p in dist.probs() {
            assert!((p - 1.0 / 27.0).abs() < 1e-15);
        }
    }

    #[test]
    fn dead_column_is_impossible_update() {
        let ninf = f64::NEG_INFINITY;
        let tables = IndexHmmTables::new(2, vec![0.0, 0.0], vec![0.0; 4], vec![0.0, 0.0, ninf, ninf]).unwrap();
        assert!(matches!(forward_pass(&tables), Err(Error::ImpossibleUpdate { t: 1 })));
    }

    #[test]
    fn oversized_enumeration_rejected() {
        let tables = IndexHmmTables::new(10, vec![0.0; 10], vec![0.0; 600], vec![0.0; 70]).unwrap();
        assert!(matches!(brute_force_path_dist(&tables), Err(Error::Usage(_))));
    }

    #[test]
    fn nan_tables_rejected() {
        assert!(IndexHmmTables::new(1, vec![f64::NAN], vec![], vec![0.0]).is_err());
        assert!(IndexHmmTables::new(2, vec![0.0; 2], vec![0.0; 3], vec![0.0; 4]).is_err());
    }
}
