use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::Drift;
use crate::noise::NoiseModel;
use crate::sim::{self, RunSpec};
use crate::stats;

/// Where a histogram came from.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Provenance {
    pub t_total: f64,
    pub burn_in: f64,
    pub dt: f64,
    pub seeds: Vec<u64>,
    /// Largest |z| of the per-coordinate Geweke comparison between the second
    /// and last quarter of each run.
    pub geweke_max_z: f64,
    pub burn_in_suspect: bool,
}

/// Regular-grid histogram over an axis-aligned box.
#[derive(Clone, Debug, Serialize)]
pub struct DensityEstimate {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub bins: Vec<usize>,
    /// Row-major over axes, last axis fastest.
    pub counts: Vec<u64>,
    /// Samples that fell outside the box.
    pub outside: u64,
    pub total: u64,
    pub provenance: Provenance,
}

pub const MAX_BINS: usize = 512;
const BOX_QUANTILE: f64 = 1e-4;
pub const MAX_OUTSIDE: f64 = 1e-3;

fn fd_bins(axis: &mut [f64], lo: f64, hi: f64) -> usize {
    axis.sort_by(|a, b| a.total_cmp(b));
    let iqr = stats::quantile_sorted(axis, 0.75) - stats::quantile_sorted(axis, 0.25);
    let width = 2.0 * iqr / (axis.len() as f64).cbrt();
    if !(width > 0.0) {
        return 1;
    }
    (((hi - lo) / width).ceil() as usize).clamp(1, MAX_BINS)
}

impl DensityEstimate {
    /// Histogram of row-major samples. Without a box, each axis spans the
    /// 1e−4 and 1 − 1e−4 empirical quantiles; without bin counts,
    /// Freedman–Diaconis widths are used (at most 512 per axis).
    pub fn from_samples(samples: &[f64], dim: usize, bins: Option<&[usize]>, bbox: Option<&[(f64, f64)]>) -> Result<Self> {
        if dim == 0 || samples.is_empty() || !samples.len().is_multiple_of(dim) {
            return Err(Error::InvalidArgument("samples must be a non-empty multiple of the dimension".into()));
        }
        let n = samples.len() / dim;
        let mut lo = Vec::with_capacity(dim);
        let mut hi = Vec::with_capacity(dim);
        let mut nb = Vec::with_capacity(dim);
        for j in 0..dim {
            let mut axis: Vec<f64> = samples.iter().skip(j).step_by(dim).copied().collect();
            axis.sort_by(|a, b| a.total_cmp(b));
            let (a, b) = match bbox {
                Some(bx) => bx[j],
                None => {
                    let a = stats::quantile_sorted(&axis, BOX_QUANTILE);
                    let b = stats::quantile_sorted(&axis, 1.0 - BOX_QUANTILE);
                    let pad = 1e-9 * (b - a).max(1e-300);
                    (a - pad, b + pad)
                }
            };
            if !(b > a) {
                return Err(Error::InvalidArgument(format!("degenerate box [{a}, {b}] on axis {j}")));
            }
            let k = match bins {
                Some(v) => v[j].max(1),
                None => fd_bins(&mut axis, a, b),
            };
            lo.push(a);
            hi.push(b);
            nb.push(k);
        }
        let mut est = Self {
            counts: vec![0; nb.iter().product()],
            lo,
            hi,
            bins: nb,
            outside: 0,
            total: n as u64,
            provenance: Provenance::default(),
        };
        for row in samples.chunks_exact(dim) {
            match est.bin_of(row) {
                Some(i) => est.counts[i] += 1,
                None => est.outside += 1,
            }
        }
        if bbox.is_some() && est.outside_fraction() > MAX_OUTSIDE {
            return Err(Error::BoxTooSmall(est.outside_fraction()));
        }
        Ok(est)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }
    pub fn width(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / self.bins[axis] as f64
    }
    pub fn inside(&self) -> u64 {
        self.total - self.outside
    }
    pub fn outside_fraction(&self) -> f64 {
        self.outside as f64 / self.total as f64
    }

    pub fn bin_of(&self, y: &[f64]) -> Option<usize> {
        let mut idx = 0;
        for j in 0..self.dim() {
            let u = (y[j] - self.lo[j]) / (self.hi[j] - self.lo[j]);
            if !(0.0..=1.0).contains(&u) {
                return None;
            }
            let k = ((u * self.bins[j] as f64) as usize).min(self.bins[j] - 1);
            idx = idx * self.bins[j] + k;
        }
        Some(idx)
    }

    /// Per-axis bin indices of a flat index.
    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for j in (0..self.dim()).rev() {
            out[j] = flat % self.bins[j];
            flat /= self.bins[j];
        }
        out
    }

    pub fn center(&self, flat: usize) -> Vec<f64> {
        self.unravel(flat).iter().enumerate().map(|(j, &k)| self.lo[j] + (k as f64 + 0.5) * self.width(j)).collect()
    }

    /// Bin probabilities normalised over the in-box samples.
    pub fn probabilities(&self) -> Vec<f64> {
        let n = self.inside() as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    /// Probability density per bin (probability / cell volume).
    pub fn densities(&self) -> Vec<f64> {
        let vol: f64 = (0..self.dim()).map(|j| self.width(j)).product();
        self.probabilities().into_iter().map(|p| p / vol).collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let head: Vec<String> = (1..=self.dim()).map(|j| format!("bin_center_{j}")).collect();
        writeln!(w, "{},probability_mass", head.join(","))?;
        for (i, p) in self.probabilities().into_iter().enumerate() {
            let c: Vec<String> = self.center(i).iter().map(|v| format!("{v:.10e}")).collect();
            writeln!(w, "{},{p:.10e}", c.join(","))?;
        }
        Ok(())
    }
}

/// Parameters of a long-run density estimate.
#[derive(Clone, Debug)]
pub struct DensityConfig {
    pub t_total: f64,
    pub dt: f64,
    pub burn_in: f64,
    pub x0: Vec<f64>,
    pub thin: usize,
    pub bins: Option<Vec<usize>>,
    pub bbox: Option<Vec<(f64, f64)>>,
}

impl DensityConfig {
    pub fn new(t_total: f64, dt: f64, dim: usize) -> Self {
        Self { t_total, dt, burn_in: 0.1 * t_total, x0: vec![0.0; dim], thin: 1, bins: None, bbox: None }
    }
    pub(crate) fn run_spec(&self) -> RunSpec {
        RunSpec { t_total: self.t_total, dt: self.dt, burn_in: self.burn_in, x0: self.x0.clone(), thin: self.thin }
    }
}

/// Geweke z-score comparing the second and last quarters of a series, using
/// batch-means standard errors within each quarter.
pub fn geweke_z(x: &[f64]) -> f64 {
    let q = x.len() / 4;
    if q < 40 {
        return 0.0;
    }
    let (m2, s2) = stats::batch_means(&x[q..2 * q], 20);
    let (m4, s4) = stats::batch_means(&x[3 * q..], 20);
    let se = (s2 * s2 + s4 * s4).sqrt();
    if se == 0.0 {
        return if m2 == m4 { 0.0 } else { f64::INFINITY };
    }
    (m2 - m4) / se
}

/// Post-burn-in states pooled over seeds, plus the worst Geweke score.
pub fn collect_states(drift: &Drift, model: &NoiseModel, cfg: &DensityConfig, seeds: &[u64]) -> Result<(Vec<f64>, f64)> {
    let d = drift.dim();
    let spec = cfg.run_spec();
    let mut all = Vec::new();
    let mut worst: f64 = 0.0;
    for &s in seeds {
        let run = sim::run(drift, model, &spec, s, 0, None)?;
        for j in 0..d {
            let axis: Vec<f64> = run.states.iter().skip(j).step_by(d).copied().collect();
            worst = worst.max(geweke_z(&axis).abs());
        }
        all.extend_from_slice(&run.states);
    }
    Ok((all, worst))
}

/// Long-run time-average histogram of the stationary state, pooled over seeds.
pub fn estimate_invariant_density(drift: &Drift, model: &NoiseModel, cfg: &DensityConfig, seeds: &[u64]) -> Result<DensityEstimate> {
    if !drift.constants.eventually_monotone {
        return Err(Error::Precondition(format!("drift '{}' is not eventually monotone", drift.name())));
    }
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("at least one seed is required".into()));
    }
    let (states, gz) = collect_states(drift, model, cfg, seeds)?;
    let mut est = DensityEstimate::from_samples(&states, drift.dim(), cfg.bins.as_deref(), cfg.bbox.as_deref())?;
    if est.outside_fraction() > MAX_OUTSIDE {
        return Err(Error::BoxTooSmall(est.outside_fraction()));
    }
    est.provenance = Provenance {
        t_total: cfg.t_total,
        burn_in: cfg.burn_in,
        dt: cfg.dt,
        seeds: seeds.to_vec(),
        geweke_max_z: gz,
        burn_in_suspect: gz > 3.0,
    };
    Ok(est)
}

// Fraction of the cell [a, b] (per axis) inside B(0, r).
fn cell_fraction(a: &[f64], b: &[f64], r: f64) -> f64 {
    let d = a.len();
    let near: f64 = (0..d).map(|j| if a[j] > 0.0 { a[j] } else if b[j] < 0.0 { -b[j] } else { 0.0 }).map(|v| v * v).sum();
    if near >= r * r {
        return 0.0;
    }
    let far: f64 = (0..d).map(|j| a[j].abs().max(b[j].abs())).map(|v| v * v).sum();
    if far <= r * r {
        return 1.0;
    }
    if d == 1 {
        return ((b[0].min(r) - a[0].max(-r)).max(0.0)) / (b[0] - a[0]);
    }
    // midpoint sub-grid with about 4096 points per cell
    let m = ((4096f64).powf(1.0 / d as f64).round() as usize).max(2);
    let total = m.pow(d as u32);
    let mut hit = 0usize;
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        let r2: f64 = (0..d)
            .map(|j| {
                let x = a[j] + (idx[j] as f64 + 0.5) / m as f64 * (b[j] - a[j]);
                x * x
            })
            .sum();
        if r2 <= r * r {
            hit += 1;
        }
        for j in 0..d {
            idx[j] += 1;
            if idx[j] < m {
                break;
            }
            idx[j] = 0;
        }
    }
    hit as f64 / total as f64
}

/// π̂(B(0,R)) with a binomial standard error; partially covered bins count
/// by the covered volume fraction.
pub fn mass_in_ball(density: &DensityEstimate, r: f64) -> (f64, f64) {
    let d = density.dim();
    let mut m = 0.0;
    let mut a = vec![0.0; d];
    let mut b = vec![0.0; d];
    for (i, &c) in density.counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        for (j, k) in density.unravel(i).into_iter().enumerate() {
            a[j] = density.lo[j] + k as f64 * density.width(j);
            b[j] = a[j] + density.width(j);
        }
        m += c as f64 * cell_fraction(&a, &b, r);
    }
    let n = density.inside() as f64;
    let p = (m / n).clamp(0.0, 1.0);
    (p, (p * (1.0 - p) / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn normal_samples(n: usize, d: usize, seed: u64) -> Vec<f64> {
        let mut r = rng::stream(seed, 0);
        (0..n * d).map(|_| rng::normal(&mut r)).collect()
    }

    #[test]
    fn histogram_mass_sums_to_one() {
        let e = DensityEstimate::from_samples(&normal_samples(20000, 2, 1), 2, None, None).unwrap();
        let s: f64 = e.probabilities().iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert!(e.bins.iter().all(|&b| b <= MAX_BINS));
    }

    #[test]
    fn ball_mass_of_standard_normal() {
        let n = 200_000;
        let e = DensityEstimate::from_samples(&normal_samples(n, 1, 2), 1, None, None).unwrap();
        let (m, se) = mass_in_ball(&e, 1.0);
        let exact = statrs::function::erf::erf(1.0 / 2f64.sqrt());
        assert!((m - exact).abs() < 4.0 * se, "{m} vs {exact}");
        assert_eq!(mass_in_ball(&e, 100.0).0, 1.0);
        assert!(mass_in_ball(&e, 1e-12).0 < 1e-10);
    }

    #[test]
    fn ball_mass_2d_matches_chi_square() {
        let e = DensityEstimate::from_samples(&normal_samples(100_000, 2, 3), 2, None, None).unwrap();
        let (m, se) = mass_in_ball(&e, 1.5);
        let exact = 1.0 - (-1.5f64 * 1.5 / 2.0).exp();
        assert!((m - exact).abs() < 4.0 * se + 2e-3, "{m} vs {exact}");
    }

    #[test]
    fn explicit_box_too_small_is_rejected() {
        let s = normal_samples(10000, 1, 4);
        let err = DensityEstimate::from_samples(&s, 1, Some(&[10]), Some(&[(-1.0, 1.0)])).unwrap_err();
        assert!(matches!(err, Error::BoxTooSmall(_)));
    }

    #[test]
    fn geweke_is_small_for_iid_and_large_for_drift() {
        let s = normal_samples(40000, 1, 5);
        assert!(geweke_z(&s).abs() < 4.0);
        let trend: Vec<f64> = (0..40000).map(|i| i as f64 * 1e-3 + 0.01 * s[i]).collect();
        assert!(geweke_z(&trend).abs() > 10.0);
    }
}
