//! Wiener-path operators.
//!
//! Paths are piecewise linear between grid nodes, so every kernel is
//! integrated exactly over each cell: with increments Δ_j = ω(−j·dt) −
//! ω(−(j+1)·dt) and unit weights c_i = ((i+1)^p − i^p)/p, p = H + 1/2,
//!
//! * 𝒟_H ω(−k·dt)   = dt^{H−1/2}/α · (Σ_{i≥0} Δ_{k+i} c_i − Σ_i Δ_i c_i)
//! * 𝒫(ω)(q·dt)     = dt^{H−1/2}/α · Σ_j Δ_j (c_{j+q} − c_j)
//! * B̃(ω)(q·dt)     = −dt^{H−1/2}/α · Σ_{j<q} Δ_j c_{q−1−j}
//!
//! The concatenation and shift maps are pure index arithmetic.

use super::alpha_h;
use crate::error::{grid_index, Error, Result};
use crate::kernel::{cell_integral, convolve, correlate, unit_weights};
use crate::path::{Path, PastPath};

/// Truncation control for operators that integrate over the whole past.
#[derive(Clone, Copy, Debug)]
pub struct OperatorOptions {
    /// Largest admissible tail-truncation estimate.
    pub tolerance: f64,
    /// Output horizon for `mvn_operator`; `None` means the full input horizon.
    pub window: Option<f64>,
}

impl Default for OperatorOptions {
    fn default() -> Self {
        Self { tolerance: 0.1, window: None }
    }
}

/// Operator output together with its tail-truncation estimate.
#[derive(Clone, Debug)]
pub struct Traced<T> {
    pub value: T,
    pub tail_estimate: f64,
}

fn increments(omega: &PastPath, j: usize) -> Vec<f64> {
    let v = omega.component(j);
    v.windows(2).map(|w| w[0] - w[1]).collect()
}

/// Estimated size of the contribution of ω before −T_past to an operator
/// evaluated at distance `t_abs` from 0.
///
/// The unseen past is modelled as continuing with the quadratic-variation
/// rate observed over the oldest tenth of the window; the kernel difference
/// (t−u)^{H−1/2} − (−u)^{H−1/2} ≈ (H−1/2)·t·(−u)^{H−3/2} then gives a
/// Gaussian tail with standard deviation
/// |H−1/2|·t·(T_past − t)^{H−1}/(α·√(2−2H))·rate, reported at three
/// standard deviations. Paths whose oldest increments vanish (compactly
/// supported test paths) have zero estimate.
pub fn tail_estimate(omega: &PastPath, h: f64, t_abs: f64) -> f64 {
    if h == 0.5 || t_abs == 0.0 {
        return 0.0;
    }
    let n = omega.steps();
    let m = (n / 10).max(1);
    let mut rate2: f64 = 0.0;
    for j in 0..omega.dim() {
        let inc = increments(omega, j);
        let qv: f64 = inc[n - m..].iter().map(|x| x * x).sum();
        rate2 = rate2.max(qv / (m as f64 * omega.dt()));
    }
    if rate2 == 0.0 {
        return 0.0;
    }
    let tp = omega.horizon();
    if t_abs >= tp {
        return f64::INFINITY;
    }
    3.0 * (h - 0.5).abs() * t_abs * (tp - t_abs).powf(h - 1.0) / (alpha_h(h) * (2.0 - 2.0 * h).sqrt()) * rate2.sqrt()
}

fn check_tail(omega: &PastPath, h: f64, t_abs: f64, tol: f64) -> Result<f64> {
    let est = tail_estimate(omega, h, t_abs);
    if est > tol {
        return Err(Error::Truncation { estimate: est, tolerance: tol });
    }
    Ok(est)
}

fn check_h(h: f64) -> Result<()> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::InvalidArgument(format!("Hurst parameter {h} outside (0,1)")));
    }
    Ok(())
}

/// 𝒟_H ω on the grid of ω, restricted to `opts.window` if given.
pub fn mvn_operator(omega: &PastPath, h: f64, opts: &OperatorOptions) -> Result<Traced<PastPath>> {
    check_h(h)?;
    let n = omega.steps();
    let dt = omega.dt();
    let out_steps = match opts.window {
        Some(w) => grid_index(w, dt)?,
        None => n,
    };
    if out_steps > n {
        return Err(Error::Horizon { requested: out_steps as f64 * dt, available: omega.horizon() });
    }
    let est = check_tail(omega, h, out_steps as f64 * dt, opts.tolerance)?;
    if h == 0.5 {
        return Ok(Traced { value: omega.truncate(out_steps), tail_estimate: est });
    }
    let d = omega.dim();
    let scale = dt.powf(h - 0.5) / alpha_h(h);
    let c = unit_weights(n, h + 0.5);
    let mut data = vec![0.0; d * (out_steps + 1)];
    for j in 0..d {
        let a = correlate(&increments(omega, j), &c, out_steps + 1);
        for k in 1..=out_steps {
            data[k * d + j] = scale * (a[k] - a[0]);
        }
    }
    Ok(Traced { value: PastPath::new(dt, d, data)?, tail_estimate: est })
}

/// 𝒟_H ω at the single node −k·dt, in O(n).
pub fn mvn_value(omega: &PastPath, h: f64, k: usize) -> Vec<f64> {
    let d = omega.dim();
    if h == 0.5 {
        return omega.row(k).to_vec();
    }
    let n = omega.steps();
    let scale = omega.dt().powf(h - 0.5) / alpha_h(h);
    let c = unit_weights(n, h + 0.5);
    (0..d)
        .map(|j| {
            let inc = increments(omega, j);
            let ak: f64 = (k..n).map(|i| inc[i] * c[i - k]).sum();
            let a0: f64 = (0..n).map(|i| inc[i] * c[i]).sum();
            scale * (ak - a0)
        })
        .collect()
}

fn same_grid(a: &PastPath, b: &PastPath) -> Result<()> {
    if a.dt() != b.dt() || a.dim() != b.dim() {
        return Err(Error::GridMismatch(format!(
            "past paths with (dt, d) = ({}, {}) and ({}, {})",
            a.dt(),
            a.dim(),
            b.dt(),
            b.dim()
        )));
    }
    Ok(())
}

/// P_t(ω⁻, ω⁺): the future ω⁺ on [−t, 0] glued in front of the past ω⁻,
/// re-anchored at 0. Horizon grows by t.
pub fn concat_p(t: f64, omega_minus: &PastPath, omega_plus: &PastPath) -> Result<PastPath> {
    same_grid(omega_minus, omega_plus)?;
    let q = grid_index(t, omega_plus.dt())?;
    if q > omega_plus.steps() {
        return Err(Error::Horizon { requested: t, available: omega_plus.horizon() });
    }
    let d = omega_minus.dim();
    let n = omega_minus.steps() + q;
    let base = omega_plus.row(q);
    let mut data = vec![0.0; d * (n + 1)];
    for k in 0..=n {
        let src = if k <= q { omega_plus.row(q - k) } else { omega_minus.row(k - q) };
        for j in 0..d {
            data[k * d + j] = if k == 0 { 0.0 } else { src[j] - base[j] };
        }
    }
    PastPath::new(omega_minus.dt(), d, data)
}

/// ϑ_t ω(s) = ω(s − t) − ω(−t); the horizon shrinks by t.
pub fn shift_vartheta(t: f64, omega: &PastPath) -> Result<PastPath> {
    let m = grid_index(t, omega.dt())?;
    if m > omega.steps() {
        return Err(Error::Horizon { requested: t, available: omega.horizon() });
    }
    let d = omega.dim();
    let n = omega.steps() - m;
    let base = omega.row(m);
    let mut data = vec![0.0; d * (n + 1)];
    for k in 1..=n {
        for j in 0..d {
            data[k * d + j] = omega.row(k + m)[j] - base[j];
        }
    }
    PastPath::new(omega.dt(), d, data)
}

/// θ_t on two-sided noise (ω⁻, ω⁺), for either sign of t.
pub fn shift_theta(t: f64, pair: (&PastPath, &PastPath)) -> Result<(PastPath, PastPath)> {
    let (minus, plus) = pair;
    if t >= 0.0 {
        Ok((concat_p(t, minus, plus)?, shift_vartheta(t, plus)?))
    } else {
        Ok((shift_vartheta(-t, minus)?, concat_p(-t, plus, minus)?))
    }
}

/// 𝒫(ω⁻) on [0, T] sampled with step `dt_out`; the output grid need not be
/// aligned with the grid of ω⁻.
pub fn history_operator(omega_minus: &PastPath, h: f64, t_end: f64, dt_out: f64, opts: &OperatorOptions) -> Result<Traced<Path>> {
    check_h(h)?;
    let steps = grid_index(t_end, dt_out)?;
    if steps == 0 {
        return Err(Error::InvalidArgument("history operator needs T >= dt".into()));
    }
    let est = check_tail(omega_minus, h, t_end, opts.tolerance)?;
    let d = omega_minus.dim();
    if h == 0.5 {
        return Ok(Traced { value: Path::zeros(dt_out, d, steps), tail_estimate: est });
    }
    let n = omega_minus.steps();
    let dt = omega_minus.dt();
    let alpha = alpha_h(h);
    let p = h + 0.5;
    let mut data = vec![0.0; d * (steps + 1)];
    let ratio = (dt_out / dt).round();
    let aligned = ratio >= 1.0 && ((ratio * dt - dt_out).abs() <= 1e-12 * dt_out);
    for j in 0..d {
        let inc = increments(omega_minus, j);
        if aligned {
            let r = ratio as usize;
            let c = unit_weights(n + steps * r, p);
            let a = correlate_strided(&inc, &c, steps, r);
            let scale = dt.powf(h - 0.5) / alpha;
            for q in 1..=steps {
                data[q * d + j] = scale * (a[q] - a[0]);
            }
        } else {
            let base: Vec<f64> = (0..n).map(|i| cell_integral(i as f64 * dt, dt, p)).collect();
            for q in 1..=steps {
                let t = q as f64 * dt_out;
                let s: f64 = (0..n).map(|i| inc[i] * (cell_integral(t + i as f64 * dt, dt, p) - base[i])).sum();
                data[q * d + j] = s / (dt * alpha);
            }
        }
    }
    Ok(Traced { value: Path::new(dt_out, d, data)?, tail_estimate: est })
}

// r[q] = Σ_i a[i]·c[i + q·stride] for q = 0..=steps.
fn correlate_strided(a: &[f64], c: &[f64], steps: usize, stride: usize) -> Vec<f64> {
    if stride == 1 {
        return correlate_shift(a, c, steps);
    }
    (0..=steps).map(|q| a.iter().enumerate().map(|(i, x)| x * c[i + q * stride]).sum()).collect()
}

// r[q] = Σ_i a[i]·c[i + q] via one convolution with the reversed kernel.
fn correlate_shift(a: &[f64], c: &[f64], steps: usize) -> Vec<f64> {
    let n = a.len();
    let rev: Vec<f64> = a.iter().rev().copied().collect();
    let full = convolve(&rev, &c[..n + steps]);
    (0..=steps).map(|q| full[n - 1 + q]).collect()
}

/// Liouville fBm B̃(ω⁺) on [0, T] on the grid of ω⁺.
pub fn liouville_fbm(omega_plus: &PastPath, h: f64, t_end: f64) -> Result<Path> {
    check_h(h)?;
    let q_max = grid_index(t_end, omega_plus.dt())?;
    if q_max > omega_plus.steps() {
        return Err(Error::Horizon { requested: t_end, available: omega_plus.horizon() });
    }
    if q_max == 0 {
        return Err(Error::InvalidArgument("Liouville fBm needs T >= dt".into()));
    }
    let d = omega_plus.dim();
    let dt = omega_plus.dt();
    let mut data = vec![0.0; d * (q_max + 1)];
    if h == 0.5 {
        for q in 0..=q_max {
            data[q * d..(q + 1) * d].copy_from_slice(omega_plus.row(q));
        }
        return Path::new(dt, d, data);
    }
    let scale = dt.powf(h - 0.5) / alpha_h(h);
    let c = unit_weights(q_max, h + 0.5);
    for j in 0..d {
        let inc = increments(omega_plus, j);
        let conv = convolve(&inc[..q_max], &c);
        for q in 1..=q_max {
            data[q * d + j] = -scale * conv[q - 1];
        }
    }
    Path::new(dt, d, data)
}

/// Forward fBm B_t = 𝒫(ω⁻)(t) + B̃_t(ω⁺) on [0, T], on the common grid.
pub fn two_sided_fbm(omega_minus: &PastPath, omega_plus: &PastPath, h: f64, t_end: f64, opts: &OperatorOptions) -> Result<Traced<Path>> {
    same_grid(omega_minus, omega_plus)?;
    let hist = history_operator(omega_minus, h, t_end, omega_minus.dt(), opts)?;
    let liou = liouville_fbm(omega_plus, h, t_end)?;
    let data = hist.value.data().iter().zip(liou.data()).map(|(a, b)| a + b).collect();
    Ok(Traced { value: Path::new(omega_minus.dt(), omega_minus.dim(), data)?, tail_estimate: hist.tail_estimate })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump(dt: f64, n: usize, center: f64, width: f64) -> PastPath {
        PastPath::from_fn(dt, 1, n, |s| {
            let x = (s + center) / width;
            vec![if x.abs() < 1.0 { (1.0 - x * x).powi(3) } else { 0.0 }]
        })
    }

    #[test]
    fn half_is_identity_and_zero_history() {
        let w = bump(0.01, 400, 1.5, 0.7);
        let o = OperatorOptions::default();
        assert_eq!(mvn_operator(&w, 0.5, &o).unwrap().value, w);
        let p = history_operator(&w, 0.5, 1.0, 0.01, &o).unwrap().value;
        assert!(p.data().iter().all(|&v| v == 0.0));
        let l = liouville_fbm(&w, 0.5, 2.0).unwrap();
        assert_eq!(l.row(150), w.row(150));
    }

    #[test]
    fn general_kernel_reduces_to_identity_near_half() {
        let w = bump(0.01, 400, 1.5, 0.7);
        let o = OperatorOptions::default();
        let near = mvn_operator(&w, 0.5 + 1e-9, &o).unwrap().value;
        assert!(near.sup_distance(&w) < 1e-6);
    }

    #[test]
    fn single_node_matches_full_operator() {
        let w = bump(0.02, 300, 2.0, 1.0);
        let full = mvn_operator(&w, 0.3, &OperatorOptions::default()).unwrap().value;
        for k in [0usize, 7, 120, 300] {
            assert!((mvn_value(&w, 0.3, k)[0] - full.row(k)[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn aligned_and_direct_history_agree() {
        let w = bump(0.01, 500, 2.0, 1.0);
        let o = OperatorOptions::default();
        let a = history_operator(&w, 0.7, 0.5, 0.02, &o).unwrap().value;
        let c = history_operator(&w, 0.7, 0.5, 0.025, &o).unwrap().value;
        // both grids contain t = 0.1 and t = 0.5
        assert!((a.at(0.1).unwrap()[0] - c.at(0.1).unwrap()[0]).abs() < 1e-12);
        assert!((a.at(0.5).unwrap()[0] - c.at(0.5).unwrap()[0]).abs() < 1e-12);
    }

    #[test]
    fn off_grid_and_horizon_errors() {
        let w = bump(0.1, 10, 0.5, 0.3);
        assert!(matches!(shift_vartheta(0.15, &w), Err(Error::OffGrid(_))));
        assert!(matches!(shift_vartheta(2.0, &w), Err(Error::Horizon { .. })));
        assert!(matches!(concat_p(1.1, &w, &w), Err(Error::Horizon { .. })));
    }

    #[test]
    fn truncation_error_reported() {
        // Brownian-like increments up to the horizon: the full window cannot be certified
        let w = PastPath::from_fn(0.1, 1, 100, |s| vec![(7.0 * s).sin()]);
        let e = mvn_operator(&w, 0.3, &OperatorOptions::default());
        assert!(matches!(e, Err(Error::Truncation { .. })));
        let ok = mvn_operator(&w, 0.3, &OperatorOptions { tolerance: 10.0, window: Some(1.0) });
        assert!(ok.unwrap().tail_estimate > 0.0);
    }
}
