use nalgebra::DMatrix;

use crate::noise::NoiseModel;
use crate::quad::gauss_kronrod;

// ∫₀ᵗ s^{2H−1} e^{−t} cosh(t−s) ds, written with e^{−t}cosh(t−s) = (e^{−s} + e^{s−2t})/2
// so that large t cannot overflow. The first unit cell is integrated term by
// term from the Taylor series, which absorbs the endpoint singularity.
fn cosh_moment(h: f64, t: f64) -> f64 {
    let p = 2.0 * h;
    let a = t.min(1.0);
    let e2t = (-2.0 * t).exp();
    let mut head = 0.0;
    let mut fact = 1.0;
    let mut apow = a.powf(p);
    for k in 0..60 {
        if k > 0 {
            fact *= k as f64;
            apow *= a;
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let term = 0.5 * (sign + e2t) * apow / (fact * (p + k as f64));
        head += term;
        if term.abs() < 1e-18 * head.abs() && k > 4 {
            break;
        }
    }
    if t <= 1.0 {
        return head;
    }
    let f = |s: f64| s.powf(p - 1.0) * 0.5 * ((-s).exp() + (s - 2.0 * t).exp());
    head + gauss_kronrod(f, 1.0, t, 1e-13)
}

/// Covariance Γ_t = 2H e^{−t} σσᵀ ∫₀ᵗ s^{2H−1} cosh(t−s) ds of the fractional
/// Ornstein–Uhlenbeck process started at 0.
pub fn fou_covariance(model: &NoiseModel, t: f64) -> DMatrix<f64> {
    let d = model.dim();
    if t <= 0.0 {
        return DMatrix::zeros(d, d);
    }
    let s = model.sigma();
    s * s.transpose() * (2.0 * model.h() * cosh_moment(model.h(), t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::gamma::gamma;

    #[test]
    fn brownian_case_has_closed_form() {
        let m = NoiseModel::scalar(0.5, 1.0, 1).unwrap();
        for t in [0.1, 1.0, 3.0, 40.0] {
            let g = fou_covariance(&m, t)[(0, 0)];
            assert!((g - (1.0 - (-2.0 * t).exp()) / 2.0).abs() < 1e-12, "t = {t}");
        }
        assert_eq!(fou_covariance(&m, 0.0)[(0, 0)], 0.0);
    }

    #[test]
    fn large_time_limit_is_h_gamma_2h() {
        for h in [0.2, 0.3, 0.7, 0.9] {
            let m = NoiseModel::scalar(h, 1.0, 1).unwrap();
            let g = fou_covariance(&m, 60.0)[(0, 0)];
            let lim = h * gamma(2.0 * h);
            assert!((g - lim).abs() < 1e-10 * lim, "H = {h}: {g} vs {lim}");
        }
    }
}
