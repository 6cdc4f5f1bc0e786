//! Oracles shared by the integration tests. Nothing here calls the forward
//! pass or backward sampler; probabilities come from direct enumeration.
#![allow(dead_code)]

use ehmm::model::{log_joint, FiniteModel, ObsSeq, StateSeq};
use ehmm::pool::FiniteKernel;
use ehmm::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub const DEMO_SIGMA: f64 = 2.5;
pub const DEMO_ETA: f64 = 2.5;
pub const DEMO_TAU: f64 = 0.4;

pub fn demo_params() -> TanhModelParams {
    TanhModelParams {
        sigma: DEMO_SIGMA,
        eta: DEMO_ETA,
        tau: DEMO_TAU,
    }
}

/// Plain finite kernel tables used by the enumeration oracle.
#[derive(Clone, Debug)]
pub struct KernelTable {
    pub rho: Vec<f64>,
    /// `r[x][x'] = R(x'|x)`.
    pub r: Vec<Vec<f64>>,
}

impl KernelTable {
    /// `R~(to | from) = rho(to) R(from | to) / rho(from)`.
    pub fn r_rev(&self, from: usize, to: usize) -> f64 {
        self.rho[to] * self.r[to][from] / self.rho[from]
    }

    pub fn kernel(&self) -> FiniteKernel {
        FiniteKernel::new(self.rho.clone(), self.r.clone()).unwrap()
    }
}

/// All sequences over `0..m` of length `n`, first coordinate most significant.
pub fn all_sequences(m: usize, n: usize) -> Vec<Vec<usize>> {
    let total = m.pow(n as u32);
    (0..total)
        .map(|mut c| {
            let mut v = vec![0; n];
            for slot in v.iter_mut().rev() {
                *slot = c % m;
                c /= m;
            }
            v
        })
        .collect()
}

pub fn seq_code(x: &[usize], m: usize) -> usize {
    x.iter().fold(0, |a, &v| a * m + v)
}

/// Exact posterior over all `m^n` sequences by enumeration.
pub fn exact_posterior(model: &FiniteModel, y: &ObsSeq<usize>) -> Vec<f64> {
    let m = model.size();
    let w: Vec<f64> = all_sequences(m, y.len())
        .iter()
        .map(|x| log_joint(model, &StateSeq::new(x.clone()).unwrap(), y).unwrap().exp())
        .collect();
    let z: f64 = w.iter().sum();
    w.iter().map(|v| v / z).collect()
}

/// Every (probability, flat pool) pair reachable from `current` at one time,
/// summed over `J` with the `1/K` factor included.
pub fn pool_outcomes(kt: &KernelTable, current: usize, k: usize) -> Vec<(f64, Vec<usize>)> {
    let m = kt.rho.len();
    let mut out = Vec::new();
    for j_draw in 0..k {
        let below = k - 1 - j_draw;
        for fill in all_sequences(m, k - 1) {
            // fill[..below] are j = -below..-1 (lowest first), fill[below..] are j = 1..J
            let mut pool = fill[..below].to_vec();
            pool.push(current);
            pool.extend_from_slice(&fill[below..]);
            let off = below;
            let mut p = 1.0 / k as f64;
            for i in off + 1..k {
                p *= kt.r[pool[i - 1]][pool[i]];
            }
            for i in (0..off).rev() {
                p *= kt.r_rev(pool[i + 1], pool[i]);
            }
            if p > 0.0 {
                out.push((p, pool));
            }
        }
    }
    out
}

/// Full transition matrix `Q[x][x']` of the embedded-HMM update, by
/// enumerating pools and index paths. Selection probabilities are
/// `pi(x)/prod rho_t(x_t)` normalized directly over index paths.
pub fn enumerate_q(model: &FiniteModel, kernels: &[KernelTable], y: &ObsSeq<usize>, k: usize) -> Vec<Vec<f64>> {
    let m = model.size();
    let n = y.len();
    let seqs = all_sequences(m, n);
    let paths = all_sequences(k, n);
    let mut q = vec![vec![0.0; seqs.len()]; seqs.len()];
    for (xi, x) in seqs.iter().enumerate() {
        let per_t: Vec<Vec<(f64, Vec<usize>)>> = (0..n).map(|t| pool_outcomes(&kernels[t], x[t], k)).collect();
        let sizes: Vec<usize> = per_t.iter().map(Vec::len).collect();
        for idx in mixed_radix(&sizes) {
            let p_pools: f64 = (0..n).map(|t| per_t[t][idx[t]].0).product();
            let weights: Vec<(usize, f64)> = paths
                .iter()
                .map(|path| {
                    let xs: Vec<usize> = (0..n).map(|t| per_t[t][idx[t]].1[path[t]]).collect();
                    let lj = log_joint(model, &StateSeq::new(xs.clone()).unwrap(), y).unwrap();
                    let rho: f64 = (0..n).map(|t| kernels[t].rho[xs[t]]).product();
                    (seq_code(&xs, m), lj.exp() / rho)
                })
                .collect();
            let total: f64 = weights.iter().map(|w| w.1).sum();
            for (code, w) in weights {
                q[xi][code] += p_pools * w / total;
            }
        }
    }
    q
}

/// Every index vector with `idx[t] < sizes[t]`.
pub fn mixed_radix(sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &s in sizes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..s).map(move |i| {
                    let mut v = prefix.clone();
                    v.push(i);
                    v
                })
            })
            .collect();
    }
    out
}

/// The two-state, two-step model used for the exact checks.
pub fn toy2() -> (FiniteModel, ObsSeq<usize>, Vec<KernelTable>) {
    let model = FiniteModel::from_probs(
        vec![0.6, 0.4],
        vec![vec![0.8, 0.2], vec![0.3, 0.7]],
        vec![vec![0.9, 0.1], vec![0.2, 0.8]],
    )
    .unwrap();
    let y = ObsSeq::new(vec![0, 1]).unwrap();
    let kernels = vec![
        KernelTable {
            rho: vec![2.0 / 3.0, 1.0 / 3.0],
            r: vec![vec![0.5, 0.5], vec![1.0, 0.0]],
        },
        KernelTable {
            rho: vec![0.5, 0.5],
            r: vec![vec![0.3, 0.7], vec![0.7, 0.3]],
        },
    ];
    (model, y, kernels)
}

/// Three states with a non-reversible (cyclic-drift) pool kernel.
pub fn toy3() -> (FiniteModel, ObsSeq<usize>, Vec<KernelTable>) {
    let model = FiniteModel::from_probs(
        vec![0.5, 0.3, 0.2],
        vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.6, 0.3], vec![0.25, 0.25, 0.5]],
        vec![vec![0.6, 0.4], vec![0.3, 0.7], vec![0.5, 0.5]],
    )
    .unwrap();
    let y = ObsSeq::new(vec![1, 0]).unwrap();
    // doubly stochastic, so uniform rho is invariant; not symmetric, so not reversible
    let cyc = KernelTable {
        rho: vec![1.0 / 3.0; 3],
        r: vec![vec![0.2, 0.7, 0.1], vec![0.1, 0.2, 0.7], vec![0.7, 0.1, 0.2]],
    };
    (model, y, vec![cyc.clone(), cyc])
}

/// Upper-tail p-value of Pearson's chi-square statistic.
pub fn chi_square_p(observed: &[u64], expected_probs: &[f64]) -> f64 {
    let total: u64 = observed.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0;
    for (o, p) in observed.iter().zip(expected_probs) {
        let e = p * total as f64;
        if e > 0.0 {
            stat += (*o as f64 - e).powi(2) / e;
            cells += 1;
        } else {
            assert_eq!(*o, 0, "observed count in a zero-probability cell");
        }
    }
    let df = (cells - 1) as f64;
    1.0 - ChiSquared::new(df).unwrap().cdf(stat)
}

/// Kolmogorov-Smirnov p-value (asymptotic) of `sample` against `cdf`.
pub fn ks_p<F: Fn(f64) -> f64>(sample: &mut [f64], cdf: F) -> f64 {
    sample.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sample.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sample.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    let mut p = 0.0;
    for j in 1..=100 {
        let j = j as f64;
        p += 2.0 * (-1f64).powf(j - 1.0) * (-2.0 * j * j * lambda * lambda).exp();
    }
    p.clamp(0.0, 1.0)
}

/// Total-variation distance between empirical counts and probabilities.
pub fn tv_distance(counts: &[u64], probs: &[f64]) -> f64 {
    let total: u64 = counts.iter().sum();
    0.5 * counts
        .iter()
        .zip(probs)
        .map(|(c, p)| (*c as f64 / total as f64 - p).abs())
        .sum::<f64>()
}

pub fn normal_cdf(x: f64, mean: f64, sd: f64) -> f64 {
    use statrs::distribution::Normal;
    Normal::new(mean, sd).unwrap().cdf(x)
}
