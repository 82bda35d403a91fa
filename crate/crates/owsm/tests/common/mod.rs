//! Shared helpers for the integration suites.
//!
//! The grid minimizer here is the independent oracle for the closed-form
//! joint MAP estimator: it searches the posterior metric
//! sigma^2 ||y - h_i x||^2 + sigma_n^2 (x - bias)^2 by brute force and never
//! touches the derivative-based solution under test.

#![allow(dead_code)]

use owsm::channel::ChannelMatrix;

/// Brute-force minimization of the joint MAP metric over every LED index and
/// a uniform grid of sample values on [lo, grid_hi] with the given step.
/// Returns (index, sample value, metric).
#[allow(clippy::too_many_arguments)]
pub fn grid_map_oracle(
    y: &[f64],
    h: &ChannelMatrix,
    sigma: f64,
    sigma_n: f64,
    bias: f64,
    lo: f64,
    grid_hi: f64,
    step: f64,
) -> (usize, f64, f64) {
    let m = h.matrix();
    let s2 = sigma * sigma;
    let n2 = sigma_n * sigma_n;
    let y_norm_sq: f64 = y.iter().map(|v| v * v).sum();
    let steps = ((grid_hi - lo) / step).round() as usize;
    let mut best = (0usize, lo, f64::INFINITY);
    for i in 0..m.ncols() {
        let col: Vec<f64> = m.column(i).iter().cloned().collect();
        let dot: f64 = y.iter().zip(&col).map(|(a, b)| a * b).sum();
        let norm_sq: f64 = col.iter().map(|v| v * v).sum();
        for k in 0..=steps {
            let x = lo + k as f64 * step;
            let residual = y_norm_sq - 2.0 * x * dot + x * x * norm_sq;
            let metric = s2 * residual + n2 * (x - bias) * (x - bias);
            if metric < best.2 {
                best = (i, x, metric);
            }
        }
    }
    best
}

/// Binomial standard error of an error-rate estimate.
pub fn binomial_se(ber: f64, bits: u64) -> f64 {
    (ber * (1.0 - ber) / bits as f64).sqrt()
}
