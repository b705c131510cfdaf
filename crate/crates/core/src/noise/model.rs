use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::quad;

/// Normalisation of the moving-average representation,
/// α_H = (1/(2H) + ∫_0^∞ ((1+s)^{H-1/2} - s^{H-1/2})² ds)^{1/2},
/// computed by double-exponential quadrature and cached per H.
pub fn alpha_h(h: f64) -> f64 {
    assert!(h > 0.0 && h < 1.0, "Hurst parameter must lie in (0,1)");
    if h == 0.5 {
        return 1.0;
    }
    static CACHE: OnceLock<Mutex<HashMap<u64, f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(&a) = cache.lock().unwrap().get(&h.to_bits()) {
        return a;
    }
    let e = h - 0.5;
    let diff = |s: f64| -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        // (1+s)^e - s^e = s^e·expm1(e·ln1p(1/s))
        let d = s.powf(e) * (e * (1.0 / s).ln_1p()).exp_m1();
        d * d
    };
    let head = quad::tanh_sinh(|s, _, _| diff(s), 0.0, 1.0, 1e-13);
    // s = 1/v maps [1, ∞) to (0, 1] with an integrable v^{1-2H} singularity
    let tail = quad::tanh_sinh(|_, v, _| diff(1.0 / v) / (v * v), 0.0, 1.0, 1e-13);
    let a = (1.0 / (2.0 * h) + head + tail).sqrt();
    cache.lock().unwrap().insert(h.to_bits(), a);
    a
}

/// Admissible σ: invertible, condition number at most θ, ‖σ‖ at least κ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SigmaClass {
    pub theta: f64,
    pub kappa: f64,
}

impl SigmaClass {
    pub fn new(theta: f64, kappa: f64) -> Result<Self> {
        if !(theta >= 1.0) || !(kappa > 0.0) {
            return Err(Error::InvalidArgument(format!("sigma class needs theta >= 1, kappa > 0 (got {theta}, {kappa})")));
        }
        Ok(Self { theta, kappa })
    }

    pub fn contains(&self, sigma: &DMatrix<f64>) -> bool {
        let sv = sigma.singular_values();
        let hi = sv.max();
        let lo = sv.min();
        lo > 0.0 && hi / lo <= self.theta * (1.0 + 1e-12) && hi >= self.kappa
    }
}

#[derive(Clone, Debug)]
pub struct NoiseModel {
    h: f64,
    sigma: DMatrix<f64>,
    sigma_inv: DMatrix<f64>,
    sigma_norm: f64,
    alpha: f64,
    /// Past horizon used when a Wiener past is synthesised, as a multiple of
    /// the forward horizon.
    pub past_factor: f64,
    /// Tolerance for the tail-truncation estimate of the moving-average operators.
    pub truncation_tolerance: f64,
}

impl NoiseModel {
    pub fn new(h: f64, sigma: DMatrix<f64>) -> Result<Self> {
        if !(h > 0.0 && h < 1.0) {
            return Err(Error::InvalidArgument(format!("Hurst parameter {h} outside (0,1)")));
        }
        if !sigma.is_square() || sigma.nrows() == 0 {
            return Err(Error::InvalidArgument("sigma must be a non-empty square matrix".into()));
        }
        let sv = sigma.singular_values();
        let (lo, hi) = (sv.min(), sv.max());
        if !(lo > 1e-12 * hi) || !hi.is_finite() {
            return Err(Error::InvalidArgument("sigma must be invertible".into()));
        }
        let sigma_inv = sigma.clone().try_inverse().ok_or_else(|| Error::InvalidArgument("sigma must be invertible".into()))?;
        Ok(Self { h, sigma, sigma_inv, sigma_norm: hi, alpha: alpha_h(h), past_factor: 50.0, truncation_tolerance: 0.1 })
    }

    /// σ = s·I in dimension d.
    pub fn scalar(h: f64, s: f64, d: usize) -> Result<Self> {
        Self::new(h, DMatrix::identity(d, d) * s)
    }

    /// Same model with σ checked against a class.
    pub fn with_class(h: f64, sigma: DMatrix<f64>, class: &SigmaClass) -> Result<Self> {
        if !class.contains(&sigma) {
            return Err(Error::InvalidArgument(format!("sigma is not in T(theta = {}, kappa = {})", class.theta, class.kappa)));
        }
        Self::new(h, sigma)
    }

    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }
    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }
    pub fn sigma_inv(&self) -> &DMatrix<f64> {
        &self.sigma_inv
    }
    /// Spectral norm ‖σ‖.
    pub fn sigma_norm(&self) -> f64 {
        self.sigma_norm
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    /// Liouville normalisation, fixed to 1/α_H so that the driftless bridge
    /// law is the exact Gaussian law of the Liouville fBm endpoint.
    pub fn rho(&self) -> f64 {
        1.0 / self.alpha
    }
    /// Direction of the noise, σ/‖σ‖.
    pub fn unit_sigma(&self) -> DMatrix<f64> {
        &self.sigma / self.sigma_norm
    }
    /// Per-component variance of the Liouville fBm at time t, t^{2H}/(2Hα²).
    pub fn liouville_variance(&self, t: f64) -> f64 {
        t.powf(2.0 * self.h) / (2.0 * self.h * self.alpha * self.alpha)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::gamma::gamma;
    use std::f64::consts::PI;

    // α_H² = Γ(H+1/2)² / (Γ(2H+1) sin(πH))
    fn alpha_h_closed_form(h: f64) -> f64 {
        (gamma(h + 0.5).powi(2) / (gamma(2.0 * h + 1.0) * (PI * h).sin())).sqrt()
    }

    #[test]
    fn alpha_matches_closed_form() {
        for &h in &[0.05, 0.2, 0.3, 0.45, 0.55, 0.7, 0.9, 0.97] {
            let a = alpha_h(h);
            let b = alpha_h_closed_form(h);
            assert!((a / b - 1.0).abs() < 1e-10, "H = {h}: {a} vs {b}");
        }
        assert_eq!(alpha_h(0.5), 1.0);
    }

    #[test]
    fn model_rejects_singular_sigma() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(NoiseModel::new(0.3, s).is_err());
        assert!(NoiseModel::scalar(1.2, 1.0, 1).is_err());
    }

    #[test]
    fn sigma_class_membership() {
        let c = SigmaClass::new(2.0, 1.0).unwrap();
        assert!(c.contains(&DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 2.0]))));
        assert!(!c.contains(&DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0]))));
        assert!(!c.contains(&(DMatrix::identity(2, 2) * 0.5)));
    }
}
