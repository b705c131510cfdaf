use serde::Serialize;

use super::density::{mass_in_ball, DensityEstimate};
use crate::error::{Error, Result};
use crate::stats::linear_fit;

#[derive(Clone, Debug, Serialize)]
pub struct TailFit {
    pub slope: f64,
    pub r2: f64,
    pub radii: Vec<f64>,
    pub log_survival: Vec<f64>,
}

const UPPER_Q: f64 = 0.95;
const LAST_Q: f64 = 0.9995;
const MIN_TAIL_BINS: usize = 10;
const MIN_BIN_COUNT: u64 = 100;
const FIT_POINTS: usize = 20;

fn survival(d: &DensityEstimate, r: f64) -> f64 {
    1.0 - mass_in_ball(d, r).0
}

// Smallest radius whose survival drops to `s`.
fn radial_quantile(d: &DensityEstimate, s: f64, r_max: f64) -> f64 {
    let (mut a, mut b) = (0.0, r_max);
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        if survival(d, m) > s {
            a = m;
        } else {
            b = m;
        }
    }
    b
}

/// Fits log(R^{2−d} π̂(|y| ≥ R)) against R² between the 0.95 and 0.9995
/// radial quantiles. The R^{2−d} factor removes the polynomial prefactor of
/// a Gaussian survival function, so Gaussian tails give a straight line with
/// slope −1/(2 var).
pub fn tail_fit(density: &DensityEstimate) -> Result<TailFit> {
    let dim = density.dim();
    let r_max = (0..dim).map(|j| density.lo[j].abs().max(density.hi[j].abs()).powi(2)).sum::<f64>().sqrt();
    let r_lo = radial_quantile(density, 1.0 - UPPER_Q, r_max);
    let r_hi = radial_quantile(density, 1.0 - LAST_Q, r_max);
    let tail_bins = density
        .counts
        .iter()
        .enumerate()
        .filter(|&(i, &c)| {
            let r = density.center(i).iter().map(|v| v * v).sum::<f64>().sqrt();
            c >= MIN_BIN_COUNT && r >= r_lo && r <= r_hi
        })
        .count();
    if tail_bins < MIN_TAIL_BINS {
        return Err(Error::Insufficient(format!(
            "{tail_bins} tail bins with at least {MIN_BIN_COUNT} samples in [{r_lo:.4}, {r_hi:.4}], need {MIN_TAIL_BINS}"
        )));
    }
    let mut radii = Vec::with_capacity(FIT_POINTS);
    let mut x = Vec::with_capacity(FIT_POINTS);
    let mut y = Vec::with_capacity(FIT_POINTS);
    for k in 0..FIT_POINTS {
        let r = r_lo + (r_hi - r_lo) * k as f64 / (FIT_POINTS - 1) as f64;
        let s = survival(density, r);
        if s <= 0.0 {
            continue;
        }
        radii.push(r);
        x.push(r * r);
        y.push((2.0 - dim as f64) * r.ln() + s.ln());
    }
    if x.len() < 3 {
        return Err(Error::Insufficient("survival vanishes inside the fit range".into()));
    }
    let (_, slope, r2) = linear_fit(&x, &y);
    Ok(TailFit { slope, r2, radii, log_survival: y })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    #[test]
    fn gaussian_slope_is_minus_half() {
        let mut r = rng::stream(11, 0);
        let s: Vec<f64> = (0..1_000_000).map(|_| rng::normal(&mut r)).collect();
        let d = DensityEstimate::from_samples(&s, 1, None, None).unwrap();
        let fit = tail_fit(&d).unwrap();
        assert!((fit.slope + 0.5).abs() < 0.05, "{}", fit.slope);
        assert!(fit.r2 > 0.99);
    }

    #[test]
    fn uniform_samples_are_rejected() {
        let mut r = rng::stream(12, 0);
        let s: Vec<f64> = (0..1_000_000).map(|_| r.random_range(-1.0..1.0)).collect();
        let d = DensityEstimate::from_samples(&s, 1, None, None).unwrap();
        assert!(matches!(tail_fit(&d), Err(Error::Insufficient(_))));
    }
}
