//! Mixing and accuracy summaries of chain output.

use crate::ehmm::ChainRecord;
use crate::error::{usage, Result};

/// The state at one time across stored iterations.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceSeries {
    pub t: usize,
    pub values: Vec<f64>,
}

pub fn trace_at_time(rec: &ChainRecord<f64>, t: usize) -> Result<TraceSeries> {
    if let Some(first) = rec.samples.first() {
        if t >= first.len() {
            return Err(usage!("time {t} out of range for sequences of length {}", first.len()));
        }
    }
    Ok(TraceSeries {
        t,
        values: rec.samples.iter().map(|s| s[t]).collect(),
    })
}

/// Sample autocorrelation at lags `0..=max_lag`, using the biased estimator
/// (autocovariances divided by the series length, then by the lag-0 value).
pub fn autocorr(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = series.len();
    if n <= max_lag {
        return Err(usage!("series of length {n} too short for lag {max_lag}"));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let c0: f64 = centered.iter().map(|v| v * v).sum();
    if !(c0 > 0.0) {
        return Err(usage!("autocorrelation undefined for a constant series"));
    }
    let mut out = Vec::with_capacity(max_lag + 1);
    out.push(1.0);
    for lag in 1..=max_lag {
        let c: f64 = centered[..n - lag]
            .iter()
            .zip(&centered[lag..])
            .map(|(a, b)| a * b)
            .sum();
        out.push(c / c0);
    }
    Ok(out)
}

/// Number of sign changes between consecutive states; zero counts as positive.
pub fn sign_switch_count(x: &[f64]) -> usize {
    x.windows(2).filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0)).count()
}

/// Lengths of maximal runs of constant sign.
pub fn sign_runs(x: &[f64]) -> Vec<usize> {
    let mut runs = Vec::new();
    let mut len = 0;
    for (i, v) in x.iter().enumerate() {
        if i > 0 && (x[i - 1] >= 0.0) != (*v >= 0.0) {
            runs.push(len);
            len = 0;
        }
        len += 1;
    }
    if len > 0 {
        runs.push(len);
    }
    runs
}

/// Median of `sign_runs(x)`.
pub fn median_sign_run(x: &[f64]) -> f64 {
    let mut runs = sign_runs(x);
    if runs.is_empty() {
        return 0.0;
    }
    runs.sort_unstable();
    let mid = runs.len() / 2;
    if runs.len() % 2 == 1 {
        runs[mid] as f64
    } else {
        (runs[mid - 1] + runs[mid]) as f64 / 2.0
    }
}

/// True when the series comes within `radius` of both `+1` and `-1`.
pub fn visits_both_regions(values: &[f64], radius: f64) -> bool {
    let near = |c: f64| values.iter().any(|v| (v - c).abs() <= radius);
    near(1.0) && near(-1.0)
}

/// Absolute error of estimated `P(x_t > 0 | y)` against an oracle.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleError {
    pub estimate: Vec<f64>,
    pub per_time: Vec<f64>,
    pub mean: f64,
}

/// Fraction of stored samples with `x_t > 0`, at every `t`.
pub fn positive_fraction(samples: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = samples.first().ok_or_else(|| usage!("no stored samples"))?;
    let n = first.len();
    let mut counts = vec![0usize; n];
    for s in samples {
        if s.len() != n {
            return Err(usage!("stored samples have differing lengths"));
        }
        for (c, v) in counts.iter_mut().zip(s) {
            *c += (*v > 0.0) as usize;
        }
    }
    Ok(counts.into_iter().map(|c| c as f64 / samples.len() as f64).collect())
}

pub fn oracle_error(rec: &ChainRecord<f64>, oracle_p_positive: &[f64]) -> Result<OracleError> {
    let samples: Vec<Vec<f64>> = rec.samples.iter().map(|s| s.as_slice().to_vec()).collect();
    oracle_error_from_samples(&samples, oracle_p_positive)
}

pub fn oracle_error_from_samples(samples: &[Vec<f64>], oracle_p_positive: &[f64]) -> Result<OracleError> {
    let estimate = positive_fraction(samples)?;
    if estimate.len() != oracle_p_positive.len() {
        return Err(usage!(
            "oracle has {} times, samples have {}",
            oracle_p_positive.len(),
            estimate.len()
        ));
    }
    let per_time: Vec<f64> = estimate
        .iter()
        .zip(oracle_p_positive)
        .map(|(e, o)| (e - o).abs())
        .collect();
    let mean = per_time.iter().sum::<f64>() / per_time.len() as f64;
    Ok(OracleError {
        estimate,
        per_time,
        mean,
    })
}
