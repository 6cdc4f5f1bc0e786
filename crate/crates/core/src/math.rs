//! Small log-space and Gaussian helpers shared across modules.

use rand::Rng;

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// `log(sum(exp(xs)))`, returning `-inf` for an empty or all-`-inf` input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// Log-density of `N(mean, sd^2)` at `x`.
#[inline]
pub fn normal_log_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * LN_2PI - sd.ln() - 0.5 * z * z
}

/// Draw an index with probability proportional to `weights`.
///
/// Weights must be non-negative with a positive finite total.
pub fn sample_categorical<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    debug_assert!(total > 0.0 && total.is_finite());
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    // u landed in the rounding gap at the top; take the last positive weight
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(weights.len() - 1)
}

/// Exponentiate `log_w - max(log_w)` in place and return the max.
pub(crate) fn exp_normalize_max(log_w: &[f64], out: &mut Vec<f64>) -> f64 {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    out.clear();
    if max == f64::NEG_INFINITY {
        out.extend(std::iter::repeat_n(0.0, log_w.len()));
    } else {
        out.extend(log_w.iter().map(|&l| (l - max).exp()));
    }
    max
}
