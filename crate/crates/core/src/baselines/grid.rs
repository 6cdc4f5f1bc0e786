//! Exact smoothing on a discretized state space.
//!
//! The real line is replaced by `m` midpoints of `[lo, hi]`. Transitions
//! between grid points are Gaussian densities row-normalized into a
//! stochastic matrix, so the discretized model is itself a finite HMM and
//! forward-backward gives its marginals exactly. The only error is the
//! discretization, which shrinks as `m` grows.

use rand::Rng;

use crate::error::{usage, Result};
use crate::math::sample_categorical;
use crate::model::{ObsSeq, StateSpaceModel};
use crate::tanh::TanhModel;

/// Boundary mass above which the grid is considered too narrow.
pub const BOUNDARY_MASS_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub m: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            lo: -3.0,
            hi: 3.0,
            m: 400,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) || self.m < 2 {
            return Err(usage!("grid needs finite lo < hi and m >= 2, got {self:?}"));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let h = (self.hi - self.lo) / self.m as f64;
        (0..self.m).map(|k| self.lo + (k as f64 + 0.5) * h).collect()
    }
}

/// Smoothed marginals of the discretized model.
#[derive(Clone, Debug)]
pub struct GridOracle {
    pub points: Vec<f64>,
    /// `marginals[t][k] = P(x_t = points[k] | y)`.
    pub marginals: Vec<Vec<f64>>,
    pub p_positive: Vec<f64>,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    /// Largest posterior mass on the two end points over all times.
    pub boundary_mass: f64,
    filtered: Vec<Vec<f64>>,
    trans: Vec<f64>,
}

impl GridOracle {
    /// A warning message when posterior mass reaches the grid edges.
    pub fn warning(&self) -> Option<String> {
        (self.boundary_mass > BOUNDARY_MASS_TOL).then(|| {
            format!(
                "grid too small: posterior mass {:.3e} at the boundary exceeds {BOUNDARY_MASS_TOL:e}",
                self.boundary_mass
            )
        })
    }

    /// Exact draws of whole grid-valued sequences from the discretized posterior.
    pub fn sample_paths<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<Vec<f64>> {
        let m = self.points.len();
        let n = self.filtered.len();
        let mut w = vec![0.0; m];
        (0..count)
            .map(|_| {
                let mut idx = vec![0usize; n];
                idx[n - 1] = sample_categorical(&self.filtered[n - 1], rng);
                for t in (0..n - 1).rev() {
                    let next = idx[t + 1];
                    for j in 0..m {
                        w[j] = self.filtered[t][j] * self.trans[j * m + next];
                    }
                    idx[t] = sample_categorical(&w, rng);
                }
                idx.into_iter().map(|i| self.points[i]).collect()
            })
            .collect()
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|p| *p /= s);
    s
}

fn exp_shifted(log_v: &[f64]) -> Vec<f64> {
    let max = log_v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    log_v.iter().map(|l| (l - max).exp()).collect()
}

/// Exact forward-backward marginals of `model` discretized on `grid`.
pub fn grid_oracle_marginals(model: &TanhModel, y: &ObsSeq<f64>, grid: &GridSpec) -> Result<GridOracle> {
    grid.validate()?;
    let points = grid.points();
    let m = points.len();
    let n = y.len();

    let mut trans = Vec::with_capacity(m * m);
    for from in &points {
        let row = exp_shifted(&points.iter().map(|to| model.log_trans(from, to)).collect::<Vec<_>>());
        let s: f64 = row.iter().sum();
        trans.extend(row.iter().map(|p| p / s));
    }
    let emission = |t: usize| exp_shifted(&points.iter().map(|x| model.log_emit(x, &y[t])).collect::<Vec<_>>());

    let mut filtered = Vec::with_capacity(n);
    let mut a = exp_shifted(&points.iter().map(|x| model.log_init(x)).collect::<Vec<_>>());
    normalize(&mut a);
    a.iter_mut().zip(emission(0)).for_each(|(p, e)| *p *= e);
    if !(normalize(&mut a) > 0.0) {
        return Err(usage!("observation at t=0 has no support on the grid"));
    }
    filtered.push(a);
    for t in 1..n {
        let prev = &filtered[t - 1];
        let mut a = vec![0.0; m];
        for (j, &pj) in prev.iter().enumerate() {
            if pj == 0.0 {
                continue;
            }
            let row = &trans[j * m..(j + 1) * m];
            for (ak, &r) in a.iter_mut().zip(row) {
                *ak += pj * r;
            }
        }
        a.iter_mut().zip(emission(t)).for_each(|(p, e)| *p *= e);
        if !(normalize(&mut a) > 0.0) {
            return Err(usage!("observation at t={t} has no support on the grid"));
        }
        filtered.push(a);
    }

    let mut marginals = vec![Vec::new(); n];
    marginals[n - 1] = filtered[n - 1].clone();
    let mut beta = vec![1.0; m];
    for t in (0..n - 1).rev() {
        // beta_t(j) = sum_k T[j,k] e_{t+1}(k) beta_{t+1}(k)
        let e = emission(t + 1);
        let eb: Vec<f64> = e.iter().zip(&beta).map(|(e, b)| e * b).collect();
        let mut next_beta: Vec<f64> = (0..m)
            .map(|j| trans[j * m..(j + 1) * m].iter().zip(&eb).map(|(r, v)| r * v).sum())
            .collect();
        normalize(&mut next_beta);
        beta = next_beta;
        let mut g: Vec<f64> = filtered[t].iter().zip(&beta).map(|(f, b)| f * b).collect();
        normalize(&mut g);
        marginals[t] = g;
    }

    let mut p_positive = Vec::with_capacity(n);
    let mut mean = Vec::with_capacity(n);
    let mut sd = Vec::with_capacity(n);
    let mut boundary_mass = 0.0f64;
    for g in &marginals {
        p_positive.push(points.iter().zip(g).filter(|(x, _)| **x > 0.0).map(|(_, p)| p).sum());
        let mu: f64 = points.iter().zip(g).map(|(x, p)| x * p).sum();
        let var: f64 = points.iter().zip(g).map(|(x, p)| (x - mu).powi(2) * p).sum();
        mean.push(mu);
        sd.push(var.max(0.0).sqrt());
        boundary_mass = boundary_mass.max(g[0] + g[m - 1]);
    }
    Ok(GridOracle {
        points,
        marginals,
        p_positive,
        mean,
        sd,
        boundary_mass,
        filtered,
        trans,
    })
}
