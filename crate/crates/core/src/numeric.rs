//! Log-space arithmetic shared by the circuit engine and the graph model.

use rand::Rng;

/// `ln Σ exp(x_i)`, stable for large magnitudes; `-inf` for an empty or
/// all-`-inf` input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    log_sum_exp_iter(xs.iter().copied())
}

pub fn log_sum_exp_iter<I>(xs: I) -> f64
where
    I: Iterator<Item = f64> + Clone,
{
    let max = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return max;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + xs.map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Writes `ln softmax(src)` into `dst`.
pub fn log_softmax_into(src: &[f64], dst: &mut [f64]) {
    let z = log_sum_exp(src);
    for (d, s) in dst.iter_mut().zip(src) {
        *d = s - z;
    }
}

pub fn log_softmax(src: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; src.len()];
    log_softmax_into(src, &mut out);
    out
}

/// Draws an index with probability proportional to `exp(w_i)`.
pub fn sample_log_weights<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let max = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = weights.iter().map(|w| (w - max).exp()).sum();
    let mut u = rng.gen::<f64>() * total;
    let mut last = 0;
    for (i, w) in weights.iter().enumerate() {
        let p = (w - max).exp();
        if p > 0.0 {
            last = i;
            if u < p {
                return i;
            }
            u -= p;
        }
    }
    last
}

/// Arithmetic mean with a fixed left-to-right summation order.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}
