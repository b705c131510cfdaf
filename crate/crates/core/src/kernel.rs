//! Closed-form cell integrals of power kernels and the discrete convolution
//! used to apply them.
//!
//! All singular kernels are integrated exactly over grid cells against
//! piecewise-linear paths; these helpers are the building blocks.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// `(x + h)^p - x^p` for x ≥ 0, h ≥ 0, evaluated without cancellation.
pub fn pow_diff(x: f64, h: f64, p: f64) -> f64 {
    if x <= 0.0 {
        return h.powf(p);
    }
    if h == 0.0 {
        return 0.0;
    }
    x.powf(p) * (p * (h / x).ln_1p()).exp_m1()
}

/// ∫_x^{x+h} u^{p-1} du = ((x+h)^p - x^p)/p.
pub fn cell_integral(x: f64, h: f64, p: f64) -> f64 {
    pow_diff(x, h, p) / p
}

/// Unit-grid weights c_i = ∫_i^{i+1} u^{p-1} du for i = 0..n.
pub fn unit_weights(n: usize, p: f64) -> Vec<f64> {
    (0..n).map(|i| cell_integral(i as f64, 1.0, p)).collect()
}

/// Full linear convolution, direct for small inputs and FFT-based otherwise.
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let len = a.len() + b.len() - 1;
    if a.len().min(b.len()) <= 64 || a.len() * b.len() <= 1 << 20 {
        let mut out = vec![0.0; len];
        for (i, &x) in a.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        return out;
    }
    let m = len.next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(m);
    let inv = planner.plan_fft_inverse(m);
    let mut fa: Vec<Complex<f64>> = a.iter().map(|&x| Complex::new(x, 0.0)).chain(std::iter::repeat(Complex::new(0.0, 0.0))).take(m).collect();
    let mut fb: Vec<Complex<f64>> = b.iter().map(|&x| Complex::new(x, 0.0)).chain(std::iter::repeat(Complex::new(0.0, 0.0))).take(m).collect();
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    inv.process(&mut fa);
    fa[..len].iter().map(|c| c.re / m as f64).collect()
}

/// Cross-correlation r[k] = Σ_i a[k+i]·c[i] for k = 0..n_out (c at least as
/// long as a); entries with k ≥ a.len() are empty sums.
pub fn correlate(a: &[f64], c: &[f64], n_out: usize) -> Vec<f64> {
    let rev: Vec<f64> = c[..a.len()].iter().rev().copied().collect();
    let full = convolve(a, &rev);
    (0..n_out).map(|k| if k < a.len() { full[k + a.len() - 1] } else { 0.0 }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pow_diff_matches_direct_where_stable() {
        let d = pow_diff(2.0, 0.5, 0.8);
        assert!((d - (2.5f64.powf(0.8) - 2f64.powf(0.8))).abs() < 1e-14);
        assert_eq!(pow_diff(0.0, 0.25, 0.5), 0.5);
    }

    #[test]
    fn weights_sum_telescopes() {
        let w = unit_weights(100, 0.7);
        let s: f64 = w.iter().sum();
        assert!((s - 100f64.powf(0.7) / 0.7).abs() < 1e-11);
    }

    #[test]
    fn fft_convolution_matches_direct() {
        let a: Vec<f64> = (0..3000).map(|i| ((i * 7919) % 101) as f64 / 50.0 - 1.0).collect();
        let b: Vec<f64> = (0..2000).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let fast = convolve(&a, &b);
        for k in [0usize, 1, 1999, 2500, 4998] {
            let direct: f64 = (0..=k).filter(|&i| i < a.len() && k - i < b.len()).map(|i| a[i] * b[k - i]).sum();
            assert!((fast[k] - direct).abs() < 1e-11, "k = {k}");
        }
    }

    #[test]
    fn correlation_definition() {
        let a = [1.0, 2.0, 3.0];
        let c = [1.0, 10.0, 100.0, 1000.0];
        assert_eq!(correlate(&a, &c, 3), vec![321.0, 32.0, 3.0]);
    }

    #[test]
    fn far_cells_keep_relative_accuracy() {
        // c_i ≈ i^{p-1} for large i, and no cancellation to zero
        let c = cell_integral(1e8, 1.0, 0.8);
        assert!((c / 1e8f64.powf(-0.2) - 1.0).abs() < 1e-8);
    }
}
