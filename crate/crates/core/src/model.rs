//! State-space model abstraction and the joint density.
//!
//! A model is three log-densities: `log P(x_0)`, `log P(x_t | x_{t-1})` and
//! `log P(y_t | x_t)`. Everything downstream works in log space; `-inf` is a
//! legal value (zero density) while NaN is always reported as an error.

use std::fmt::Debug;
use std::ops::Index;

use crate::error::{numeric, usage, Error, Result};
use crate::math::log_sum_exp;

/// A value usable as a hidden state.
pub trait StateValue: Clone + Debug + PartialEq + Send + Sync {
    /// False for values that can never be a legal state (NaN reals).
    fn is_valid(&self) -> bool {
        true
    }
}

impl StateValue for f64 {
    fn is_valid(&self) -> bool {
        self.is_finite()
    }
}

impl StateValue for usize {}

/// What kind of state space a model lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateDescriptor {
    ScalarReal,
    /// States are the labels `0..size`.
    Finite {
        size: usize,
    },
}

/// Log-densities defining the posterior over hidden sequences.
///
/// Implementations must be pure: the same arguments always give the same
/// value, and calls may happen concurrently from several threads.
pub trait StateSpaceModel: Sync {
    type State: StateValue;
    type Obs: Sync;

    fn descriptor(&self) -> StateDescriptor;
    fn log_init(&self, x: &Self::State) -> f64;
    fn log_trans(&self, prev: &Self::State, x: &Self::State) -> f64;
    fn log_emit(&self, x: &Self::State, y: &Self::Obs) -> f64;
}

/// A non-empty hidden state sequence `x_0, ..., x_{n-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSeq<S>(Vec<S>);

impl<S: StateValue> StateSeq<S> {
    pub fn new(values: Vec<S>) -> Result<Self> {
        if values.is_empty() {
            return Err(usage!("state sequence must have length >= 1"));
        }
        if let Some(t) = values.iter().position(|v| !v.is_valid()) {
            return Err(numeric!("state at t={t} is not finite: {:?}", values[t]));
        }
        Ok(StateSeq(values))
    }
}

impl<S> StateSeq<S> {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_slice(&self) -> &[S] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<S> {
        self.0
    }
}

impl<S> Index<usize> for StateSeq<S> {
    type Output = S;
    fn index(&self, t: usize) -> &S {
        &self.0[t]
    }
}

/// A non-empty observation sequence `y_0, ..., y_{n-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ObsSeq<O>(Vec<O>);

impl<O> ObsSeq<O> {
    pub fn new(values: Vec<O>) -> Result<Self> {
        if values.is_empty() {
            return Err(usage!("observation sequence must have length >= 1"));
        }
        Ok(ObsSeq(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_slice(&self) -> &[O] {
        &self.0
    }
}

impl<O> Index<usize> for ObsSeq<O> {
    type Output = O;
    fn index(&self, t: usize) -> &O {
        &self.0[t]
    }
}

fn check_term(v: f64, what: &str, t: usize) -> Result<f64> {
    if v.is_nan() {
        Err(numeric!("{what} log-density is NaN at t={t}"))
    } else {
        Ok(v)
    }
}

/// `log P(x_0) + sum log P(x_t|x_{t-1}) + sum log P(y_t|x_t)`.
///
/// Returns `-inf` as soon as any factor has zero density.
pub fn log_joint<M: StateSpaceModel>(model: &M, x: &StateSeq<M::State>, y: &ObsSeq<M::Obs>) -> Result<f64> {
    if x.len() != y.len() {
        return Err(usage!(
            "state sequence length {} != observation length {}",
            x.len(),
            y.len()
        ));
    }
    let mut total = check_term(model.log_init(&x[0]), "initial", 0)?;
    for t in 0..x.len() {
        if t > 0 {
            total += check_term(model.log_trans(&x[t - 1], &x[t]), "transition", t)?;
        }
        total += check_term(model.log_emit(&x[t], &y[t]), "emission", t)?;
        if total == f64::NEG_INFINITY {
            return Ok(total);
        }
    }
    if total.is_nan() {
        return Err(numeric!("joint log-density is NaN"));
    }
    Ok(total)
}

/// Unnormalized log posterior `log pi(x)`; equal to [`log_joint`] since
/// `P(y)` does not depend on `x`.
pub fn log_posterior_unnorm<M: StateSpaceModel>(model: &M, x: &StateSeq<M::State>, y: &ObsSeq<M::Obs>) -> Result<f64> {
    log_joint(model, x, y)
}

/// Tabulated model on states `0..size` and observation symbols `0..symbols`.
#[derive(Clone, Debug)]
pub struct FiniteModel {
    log_init: Vec<f64>,
    log_trans: Vec<Vec<f64>>,
    log_emit: Vec<Vec<f64>>,
}

const STOCHASTIC_TOL: f64 = 1e-12;

fn check_distribution(p: &[f64], what: &str) -> Result<()> {
    if p.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
        return Err(Error::Domain(format!("{what} has a negative or non-finite entry")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::Domain(format!("{what} sums to {s}, not 1")));
    }
    Ok(())
}

impl FiniteModel {
    /// Build from probability tables. `init` and every row of `trans` must
    /// sum to one within 1e-12; `emit[x][y]` only needs to be non-negative.
    pub fn from_probs(init: Vec<f64>, trans: Vec<Vec<f64>>, emit: Vec<Vec<f64>>) -> Result<Self> {
        let size = init.len();
        if size == 0 {
            return Err(usage!("finite model needs at least one state"));
        }
        if trans.len() != size || trans.iter().any(|r| r.len() != size) {
            return Err(usage!("transition table must be {size}x{size}"));
        }
        if emit.len() != size {
            return Err(usage!("emission table must have {size} rows"));
        }
        check_distribution(&init, "initial distribution")?;
        for (i, row) in trans.iter().enumerate() {
            check_distribution(row, &format!("transition row {i}"))?;
        }
        for row in &emit {
            if row.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
                return Err(Error::Domain("emission table has an invalid entry".into()));
            }
        }
        let ln = |v: &Vec<f64>| v.iter().map(|p| p.ln()).collect::<Vec<_>>();
        Ok(FiniteModel {
            log_init: ln(&init),
            log_trans: trans.iter().map(ln).collect(),
            log_emit: emit.iter().map(ln).collect(),
        })
    }

    pub fn size(&self) -> usize {
        self.log_init.len()
    }

    /// `log P(y)` by the forward recursion over all states.
    pub fn log_evidence(&self, y: &ObsSeq<usize>) -> Result<f64> {
        let m = self.size();
        let mut alpha: Vec<f64> = (0..m)
            .map(|k| Ok(self.log_init[k] + self.log_emit_at(k, y[0])?))
            .collect::<Result<_>>()?;
        let mut terms = vec![0.0; m];
        for t in 1..y.len() {
            let next = (0..m)
                .map(|k| {
                    for j in 0..m {
                        terms[j] = alpha[j] + self.log_trans[j][k];
                    }
                    Ok(log_sum_exp(&terms) + self.log_emit_at(k, y[t])?)
                })
                .collect::<Result<Vec<_>>>()?;
            alpha = next;
        }
        Ok(log_sum_exp(&alpha))
    }

    fn log_emit_at(&self, x: usize, y: usize) -> Result<f64> {
        self.log_emit[x]
            .get(y)
            .copied()
            .ok_or_else(|| usage!("observation symbol {y} out of range"))
    }
}

impl StateSpaceModel for FiniteModel {
    type State = usize;
    type Obs = usize;

    fn descriptor(&self) -> StateDescriptor {
        StateDescriptor::Finite { size: self.size() }
    }

    fn log_init(&self, x: &usize) -> f64 {
        self.log_init[*x]
    }

    fn log_trans(&self, prev: &usize, x: &usize) -> f64 {
        self.log_trans[*prev][*x]
    }

    fn log_emit(&self, x: &usize, y: &usize) -> f64 {
        self.log_emit[*x].get(*y).copied().unwrap_or(f64::NAN)
    }
}
