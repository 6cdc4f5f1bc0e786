//! Pool construction around the current state.
//!
//! At each time a pool of `K` candidate states is grown from the current
//! state: a uniformly chosen number `J` of steps forward with the pool
//! kernel `R`, and `K - 1 - J` steps backward with its reversal `R~`, where
//! `rho(x) R(x'|x) = rho(x') R~(x|x')`. The pool is stored flat, lowest
//! signed index first, with the current state at a recorded offset.

use rand::Rng;

use crate::error::{domain, numeric, usage, Result};
use crate::math::{log_sum_exp, sample_categorical};
use crate::model::StateValue;

/// A Markov kernel leaving the pool density `rho` invariant, together with
/// its reversal.
///
/// `step_rev` is always required; kernels that satisfy detailed balance with
/// respect to `rho` simply forward it to `step_fwd`.
pub trait PoolKernel: Sync {
    type State: StateValue;

    fn log_rho(&self, x: &Self::State) -> f64;
    /// Draw from `R(. | x)`.
    fn step_fwd<R: Rng + ?Sized>(&self, x: &Self::State, rng: &mut R) -> Self::State;
    /// Draw from `R~(. | x)`.
    fn step_rev<R: Rng + ?Sized>(&self, x: &Self::State, rng: &mut R) -> Self::State;
}

/// Candidate states at one time, indexed by signed `j` in
/// `-(K-1-J) ..= J` with `j = 0` the current state.
#[derive(Clone, Debug, PartialEq)]
pub struct Pool<S> {
    states: Vec<S>,
    j_draw: usize,
}

impl<S> Pool<S> {
    /// Assemble a pool from its flat states (lowest `j` first) and `J`.
    pub fn from_parts(states: Vec<S>, j_draw: usize) -> Result<Self> {
        if states.is_empty() {
            return Err(usage!("pool must contain at least one state"));
        }
        if j_draw >= states.len() {
            return Err(usage!("J = {j_draw} out of range for pool of {}", states.len()));
        }
        Ok(Pool { states, j_draw })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn j_draw(&self) -> usize {
        self.j_draw
    }

    /// Flat position of `j = 0`.
    pub fn offset(&self) -> usize {
        self.states.len() - 1 - self.j_draw
    }

    pub fn current(&self) -> &S {
        &self.states[self.offset()]
    }

    /// State at signed index `j`, if within the pool.
    pub fn get(&self, j: isize) -> Option<&S> {
        let i = self.offset() as isize + j;
        usize::try_from(i).ok().and_then(|i| self.states.get(i))
    }

    pub fn states(&self) -> &[S] {
        &self.states
    }
}

/// Build the pool for one time step around `current`.
pub fn build_pool<P, R>(kernel: &P, current: &P::State, k: usize, rng: &mut R) -> Result<Pool<P::State>>
where
    P: PoolKernel,
    R: Rng + ?Sized,
{
    if k == 0 {
        return Err(usage!("pool size K must be >= 1"));
    }
    let j_draw = rng.random_range(0..k);
    let offset = k - 1 - j_draw;
    let mut states = Vec::with_capacity(k);
    // backward half is generated outward from the current state, then flipped
    let mut x = current.clone();
    for _ in 0..offset {
        x = kernel.step_rev(&x, rng);
        if !x.is_valid() {
            return Err(numeric!("reversed pool kernel produced an invalid state {x:?}"));
        }
        states.push(x.clone());
    }
    states.reverse();
    states.push(current.clone());
    let mut x = current.clone();
    for _ in 0..j_draw {
        x = kernel.step_fwd(&x, rng);
        if !x.is_valid() {
            return Err(numeric!("pool kernel produced an invalid state {x:?}"));
        }
        states.push(x.clone());
    }
    Ok(Pool { states, j_draw })
}

/// Reversal of a finite kernel with respect to `rho`.
///
/// `log_r[x][x']` is `log R(x'|x)`; the result uses the same layout,
/// `out[x'][x] = log R~(x|x') = log rho(x) + log R(x'|x) - log rho(x')`.
/// States with `rho = 0` that no positive-`rho` state can reach get an
/// identity row, since they never occur in a pool.
pub fn finite_reverse_kernel(log_r: &[Vec<f64>], log_rho: &[f64]) -> Result<Vec<Vec<f64>>> {
    let m = log_rho.len();
    if log_r.len() != m || log_r.iter().any(|row| row.len() != m) {
        return Err(usage!("kernel table must be {m}x{m}"));
    }
    let mut out = vec![vec![f64::NEG_INFINITY; m]; m];
    for to in 0..m {
        let reachable = (0..m).any(|from| log_rho[from] + log_r[from][to] > f64::NEG_INFINITY);
        if log_rho[to] == f64::NEG_INFINITY {
            if reachable {
                return Err(domain!("rho({to}) = 0 but state {to} is reachable under R"));
            }
            out[to][to] = 0.0;
            continue;
        }
        for from in 0..m {
            out[to][from] = log_rho[from] + log_r[from][to] - log_rho[to];
        }
        let total = log_sum_exp(&out[to]).exp();
        if (total - 1.0).abs() > 1e-12 {
            return Err(domain!(
                "R does not leave rho invariant: reversed row {to} sums to {total}"
            ));
        }
    }
    Ok(out)
}

/// Tabulated pool kernel on states `0..m`.
#[derive(Clone, Debug)]
pub struct FiniteKernel {
    log_rho: Vec<f64>,
    log_r: Vec<Vec<f64>>,
    log_r_rev: Vec<Vec<f64>>,
    fwd_p: Vec<Vec<f64>>,
    rev_p: Vec<Vec<f64>>,
}

fn ln_table(t: &[Vec<f64>]) -> Vec<Vec<f64>> {
    t.iter().map(|r| r.iter().map(|p| p.ln()).collect()).collect()
}

fn exp_table(t: &[Vec<f64>]) -> Vec<Vec<f64>> {
    t.iter().map(|r| r.iter().map(|l| l.exp()).collect()).collect()
}

impl FiniteKernel {
    /// A general `rho`-invariant kernel; the reversal is computed.
    /// `r[x][x']` is `R(x'|x)`.
    pub fn new(rho: Vec<f64>, r: Vec<Vec<f64>>) -> Result<Self> {
        Self::check(&rho, &r)?;
        let log_rho: Vec<f64> = rho.iter().map(|p| p.ln()).collect();
        let log_r = ln_table(&r);
        let log_r_rev = finite_reverse_kernel(&log_r, &log_rho)?;
        Ok(FiniteKernel {
            fwd_p: r,
            rev_p: exp_table(&log_r_rev),
            log_rho,
            log_r,
            log_r_rev,
        })
    }

    /// A kernel satisfying detailed balance with respect to `rho`, so the
    /// reversal equals the kernel itself.
    pub fn reversible(rho: Vec<f64>, r: Vec<Vec<f64>>) -> Result<Self> {
        Self::check(&rho, &r)?;
        let m = rho.len();
        for a in 0..m {
            for b in 0..m {
                let lhs = rho[a] * r[a][b];
                let rhs = rho[b] * r[b][a];
                if (lhs - rhs).abs() > 1e-12 {
                    return Err(domain!("kernel is not reversible at ({a}, {b})"));
                }
            }
        }
        let log_r = ln_table(&r);
        Ok(FiniteKernel {
            log_rho: rho.iter().map(|p| p.ln()).collect(),
            log_r_rev: log_r.clone(),
            log_r,
            rev_p: r.clone(),
            fwd_p: r,
        })
    }

    /// `R(x'|x) = 1` iff `x' = x`.
    pub fn identity(rho: Vec<f64>) -> Result<Self> {
        let m = rho.len();
        let r = (0..m)
            .map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::reversible(rho, r)
    }

    fn check(rho: &[f64], r: &[Vec<f64>]) -> Result<()> {
        let m = rho.len();
        if m == 0 || r.len() != m || r.iter().any(|row| row.len() != m) {
            return Err(usage!("kernel needs a non-empty square table matching rho"));
        }
        let all_ok = |v: &[f64]| v.iter().all(|&p| p >= 0.0 && p.is_finite());
        if !all_ok(rho) || r.iter().any(|row| !all_ok(row)) {
            return Err(domain!("kernel probabilities must be finite and non-negative"));
        }
        if (rho.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(domain!("rho does not sum to 1"));
        }
        for (i, row) in r.iter().enumerate() {
            if (row.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                return Err(domain!("kernel row {i} does not sum to 1"));
            }
        }
        for b in 0..m {
            let flow: f64 = (0..m).map(|a| rho[a] * r[a][b]).sum();
            if (flow - rho[b]).abs() > 1e-12 {
                return Err(domain!("kernel does not leave rho invariant at state {b}"));
            }
        }
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.log_rho.len()
    }

    /// `log R(to | from)`.
    pub fn log_r(&self, from: usize, to: usize) -> f64 {
        self.log_r[from][to]
    }

    /// `log R~(to | from)`.
    pub fn log_r_rev(&self, from: usize, to: usize) -> f64 {
        self.log_r_rev[from][to]
    }
}

impl PoolKernel for FiniteKernel {
    type State = usize;

    fn log_rho(&self, x: &usize) -> f64 {
        self.log_rho[*x]
    }

    fn step_fwd<R: Rng + ?Sized>(&self, x: &usize, rng: &mut R) -> usize {
        sample_categorical(&self.fwd_p[*x], rng)
    }

    fn step_rev<R: Rng + ?Sized>(&self, x: &usize, rng: &mut R) -> usize {
        sample_categorical(&self.rev_p[*x], rng)
    }
}
