//! Gaussian state-space model with `tanh` drift, and Gaussian pool kernels.
//!
//! ```text
//! x_0     ~ N(m_0, s_0^2)                    (default N(0, 1))
//! x_t     ~ N(tanh(eta * x_{t-1}), tau^2)
//! y_t     ~ N(x_t, sigma^2)
//! ```
//!
//! For `eta > 1` the drift has stable fixed points near `+1` and `-1`, and
//! with small `tau` the states linger around one of them for long stretches.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{domain, usage, Result};
use crate::math::normal_log_pdf;
use crate::model::{ObsSeq, StateDescriptor, StateSeq, StateSpaceModel};
use crate::pool::PoolKernel;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TanhModelParams {
    /// Observation noise sd.
    pub sigma: f64,
    /// Drift expansion factor.
    pub eta: f64,
    /// Transition noise sd.
    pub tau: f64,
}

impl TanhModelParams {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.sigma) || !ok(self.tau) || !self.eta.is_finite() {
            return Err(usage!("need sigma > 0, tau > 0 and finite eta, got {self:?}"));
        }
        Ok(())
    }
}

/// Normal initial-state distribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitialDist {
    pub mean: f64,
    pub sd: f64,
}

impl Default for InitialDist {
    fn default() -> Self {
        InitialDist { mean: 0.0, sd: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TanhModel {
    pub params: TanhModelParams,
    pub init: InitialDist,
}

pub fn make_tanh_model(p: TanhModelParams) -> Result<TanhModel> {
    p.validate()?;
    Ok(TanhModel {
        params: p,
        init: InitialDist::default(),
    })
}

impl TanhModel {
    pub fn with_init(mut self, init: InitialDist) -> Result<Self> {
        if !(init.sd.is_finite() && init.sd > 0.0 && init.mean.is_finite()) {
            return Err(usage!("initial sd must be positive and finite"));
        }
        self.init = init;
        Ok(self)
    }

    #[inline]
    pub fn drift(&self, x: f64) -> f64 {
        (self.params.eta * x).tanh()
    }

    /// Ancestral simulation of `(x, y)` of length `n`.
    pub fn simulate<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<(StateSeq<f64>, ObsSeq<f64>)> {
        let x0 = Normal::new(self.init.mean, self.init.sd)
            .map_err(|e| usage!("{e}"))?
            .sample(rng);
        self.simulate_from(x0, n, rng)
    }

    /// Like [`TanhModel::simulate`] but with `x_0` fixed.
    pub fn simulate_from<R: Rng + ?Sized>(
        &self,
        x0: f64,
        n: usize,
        rng: &mut R,
    ) -> Result<(StateSeq<f64>, ObsSeq<f64>)> {
        if n == 0 {
            return Err(usage!("sequence length must be >= 1"));
        }
        let std = rand_distr::StandardNormal;
        let TanhModelParams { sigma, tau, .. } = self.params;
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        let mut x = x0;
        for t in 0..n {
            if t > 0 {
                let z: f64 = std.sample(rng);
                x = self.drift(x) + tau * z;
            }
            let z: f64 = std.sample(rng);
            xs.push(x);
            ys.push(x + sigma * z);
        }
        Ok((StateSeq::new(xs)?, ObsSeq::new(ys)?))
    }
}

impl StateSpaceModel for TanhModel {
    type State = f64;
    type Obs = f64;

    fn descriptor(&self) -> StateDescriptor {
        StateDescriptor::ScalarReal
    }

    fn log_init(&self, x: &f64) -> f64 {
        normal_log_pdf(*x, self.init.mean, self.init.sd)
    }

    fn log_trans(&self, prev: &f64, x: &f64) -> f64 {
        normal_log_pdf(*x, self.drift(*prev), self.params.tau)
    }

    fn log_emit(&self, x: &f64, y: &f64) -> f64 {
        normal_log_pdf(*y, *x, self.params.sigma)
    }
}

/// Pool density `N(mu, nu^2)` and autoregression coefficient `alpha`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussPoolParams {
    pub mu: f64,
    pub nu: f64,
    pub alpha: f64,
}

impl GaussPoolParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu.is_finite() && self.nu > 0.0) || !self.mu.is_finite() {
            return Err(usage!("pool needs finite mu and nu > 0, got {self:?}"));
        }
        if !(self.alpha.abs() < 1.0) {
            return Err(usage!("alpha must lie in (-1, 1), got {}", self.alpha));
        }
        Ok(())
    }
}

/// `R(x'|x) = N(x' | mu + alpha (x - mu), (1 - alpha^2) nu^2)`, reversible
/// with respect to `N(mu, nu^2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussPoolKernel {
    params: GaussPoolParams,
    step_sd: f64,
}

pub fn make_gauss_pool_kernel(g: GaussPoolParams) -> Result<GaussPoolKernel> {
    g.validate()?;
    Ok(GaussPoolKernel {
        params: g,
        step_sd: (1.0 - g.alpha * g.alpha).sqrt() * g.nu,
    })
}

impl GaussPoolKernel {
    pub fn params(&self) -> GaussPoolParams {
        self.params
    }

    /// `log R(to | from)`.
    pub fn log_r(&self, from: f64, to: f64) -> f64 {
        let GaussPoolParams { mu, alpha, .. } = self.params;
        normal_log_pdf(to, mu + alpha * (from - mu), self.step_sd)
    }
}

impl PoolKernel for GaussPoolKernel {
    type State = f64;

    fn log_rho(&self, x: &f64) -> f64 {
        normal_log_pdf(*x, self.params.mu, self.params.nu)
    }

    fn step_fwd<R: Rng + ?Sized>(&self, x: &f64, rng: &mut R) -> f64 {
        let GaussPoolParams { mu, alpha, .. } = self.params;
        let z: f64 = rand_distr::StandardNormal.sample(rng);
        if alpha == 0.0 {
            return mu + self.step_sd * z;
        }
        mu + alpha * (x - mu) + self.step_sd * z
    }

    fn step_rev<R: Rng + ?Sized>(&self, x: &f64, rng: &mut R) -> f64 {
        self.step_fwd(x, rng)
    }
}

/// How pool means and sds are chosen per time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PoolStrategy {
    /// The same `N(mu, nu^2)` at every time.
    Fixed { mu: f64, nu: f64 },
    /// `mu_t = y_t`, `nu_t = sigma`: the flat-prior posterior given `y_t` alone.
    PerObs,
}

pub fn pool_params_from_obs(
    strategy: PoolStrategy,
    y: &ObsSeq<f64>,
    p: &TanhModelParams,
    alpha: f64,
) -> Result<Vec<GaussPoolParams>> {
    p.validate()?;
    let out: Vec<GaussPoolParams> = match strategy {
        PoolStrategy::Fixed { mu, nu } => vec![GaussPoolParams { mu, nu, alpha }; y.len()],
        PoolStrategy::PerObs => y
            .as_slice()
            .iter()
            .map(|&yt| GaussPoolParams {
                mu: yt,
                nu: p.sigma,
                alpha,
            })
            .collect(),
    };
    for g in &out {
        g.validate()?;
    }
    Ok(out)
}

/// Pool kernels for every time step under `strategy`.
pub fn gauss_pool_kernels(
    strategy: PoolStrategy,
    y: &ObsSeq<f64>,
    p: &TanhModelParams,
    alpha: f64,
) -> Result<Vec<GaussPoolKernel>> {
    pool_params_from_obs(strategy, y, p, alpha)?
        .into_iter()
        .map(make_gauss_pool_kernel)
        .collect()
}

/// Checks that every pool density is positive at each probe point.
pub fn check_pool_support(kernels: &[GaussPoolKernel], probes: &[f64]) -> Result<()> {
    for (t, k) in kernels.iter().enumerate() {
        for &x in probes {
            if !(k.log_rho(&x) > f64::NEG_INFINITY) {
                return Err(domain!("pool density at t={t} vanishes at x={x}"));
            }
        }
    }
    Ok(())
}
