//! Direct Gaussian sampling of the Liouville fBm from its covariance,
//! independent of the operator discretisation; used as a reference.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::noise::alpha_h;
use crate::path::Path;
use crate::quad::tanh_sinh;
use crate::rng::{self, Rng};

/// Cov(B̃_s, B̃_t) = α⁻² ∫₀^{min(s,t)} (t−u)^{H−1/2}(s−u)^{H−1/2} du.
pub fn liouville_covariance(h: f64, s: f64, t: f64) -> f64 {
    let (a, b) = if s <= t { (s, t) } else { (t, s) };
    if a <= 0.0 {
        return 0.0;
    }
    let e = h - 0.5;
    let alpha = alpha_h(h);
    // u ↦ (b−u)^e (a−u)^e; `right` = a − u is computed without cancellation
    let f = |_: f64, _: f64, right: f64| (b - a + right).powf(e) * right.powf(e);
    tanh_sinh(f, 0.0, a, 1e-12) / (alpha * alpha)
}

/// Cholesky factor of the Liouville covariance on the nodes dt, 2dt, …, n·dt.
pub struct LiouvilleSampler {
    n: usize,
    dt: f64,
    factor: DMatrix<f64>,
}

impl LiouvilleSampler {
    pub fn new(h: f64, n: usize, dt: f64) -> Result<Self> {
        let cov = DMatrix::from_fn(n, n, |i, j| liouville_covariance(h, (i + 1) as f64 * dt, (j + 1) as f64 * dt));
        let ch = cov.cholesky().ok_or(Error::NotPositiveDefinite { h, n })?;
        Ok(Self { n, dt, factor: ch.unpack() })
    }

    /// One path on [0, n·dt] in each of `dim` independent components.
    pub fn sample(&self, dim: usize, rng: &mut Rng) -> Path {
        let mut data = vec![0.0; dim * (self.n + 1)];
        let mut z = vec![0.0; self.n];
        for j in 0..dim {
            rng::fill_normal(rng, &mut z);
            for i in 0..self.n {
                data[(i + 1) * dim + j] = (0..=i).map(|k| self.factor[(i, k)] * z[k]).sum();
            }
        }
        Path::new(self.dt, dim, data).expect("non-empty grid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variance_matches_closed_form() {
        for h in [0.3, 0.7] {
            let t: f64 = 0.4;
            let v = liouville_covariance(h, t, t);
            let want = t.powf(2.0 * h) / (2.0 * h * alpha_h(h).powi(2));
            assert!((v - want).abs() < 1e-10 * want);
        }
        assert!((liouville_covariance(0.5, 0.3, 0.8) - 0.3).abs() < 1e-12);
    }
}
