use std::ops::Range;

use serde::Serialize;
use statrs::function::gamma::gamma;

use super::sampler::{BridgePath, BridgeSampler};
use crate::error::{Error, Result};
use crate::flow::Drift;
use crate::fraccalc::{frac_derivative_regularized, frac_integral, FracOrder};
use crate::kernel::cell_integral;
use crate::noise::{liouville_fbm, NoiseModel};
use crate::path::{Path, PastPath};

/// Girsanov integrand 𝓛 = σ⁻¹/(ρΓ(H+1/2)) · 𝒥^{1/2−H}[F(l + σB̃(X))].
///
/// For H > 1/2 the fractional derivative is split into a grid part and a
/// coefficient of s^{1/2−H} (zero unless F(l(0)) ≠ 0); for H ≤ 1/2 the
/// singular coefficient is zero.
#[derive(Clone, Debug)]
pub struct GirsanovIntegrand {
    pub regular: Path,
    pub singular: Vec<f64>,
    /// The solution l + σB̃(X) the integrand was evaluated along.
    pub state: Path,
    pub warning: Option<String>,
}

/// Evaluates 𝓛 along one bridge sample. `l` is the deterministic part of
/// the solution (initial value plus history term) on the bridge grid, in
/// the original coordinates.
pub fn girsanov_l(drift: &Drift, model: &NoiseModel, l: &Path, bridge: &BridgePath) -> Result<GirsanovIntegrand> {
    let x = &bridge.x;
    if l.steps() != x.steps() || (l.dt() - x.dt()).abs() > 1e-12 * x.dt() || l.dim() != x.dim() {
        return Err(Error::GridMismatch(format!(
            "l has {} steps of {} in dimension {}, bridge has {} steps of {}",
            l.steps(),
            l.dt(),
            l.dim(),
            x.steps(),
            x.dt()
        )));
    }
    let d = x.dim();
    let h = model.h();
    let t0 = x.horizon();
    let liou = liouville_fbm(&PastPath::new(x.dt(), d, x.data().to_vec())?, h, t0)?;
    let sigma = model.sigma();
    let sinv = model.sigma_inv();
    let mut state = Path::zeros(x.dt(), d, x.steps());
    let mut f = Path::zeros(x.dt(), d, x.steps());
    let mut fy = vec![0.0; d];
    for k in 0..x.len() {
        let b = liou.row(k);
        let row = state.row_mut(k);
        for i in 0..d {
            row[i] = l.row(k)[i] + (0..d).map(|j| sigma[(i, j)] * b[j]).sum::<f64>();
        }
        drift.eval(state.row(k), &mut fy);
        let out = f.row_mut(k);
        for i in 0..d {
            out[i] = (0..d).map(|j| sinv[(i, j)] * fy[j]).sum();
        }
    }
    let norm = 1.0 / (model.rho() * gamma(h + 0.5));
    let scale = |p: &Path| Path::new(p.dt(), d, p.data().iter().map(|v| norm * v).collect()).expect("same shape");
    if h < 0.5 {
        let reg = frac_integral(FracOrder::new(0.5 - h)?, &f);
        Ok(GirsanovIntegrand { regular: scale(&reg), singular: vec![0.0; d], state, warning: None })
    } else if h == 0.5 {
        Ok(GirsanovIntegrand { regular: scale(&f), singular: vec![0.0; d], state, warning: None })
    } else {
        let split = frac_derivative_regularized(FracOrder::new(h - 0.5)?, &f);
        Ok(GirsanovIntegrand {
            regular: scale(&split.regular),
            singular: split.singular.iter().map(|v| norm * v).collect(),
            state,
            warning: split.warning,
        })
    }
}

/// ∫⟨𝓛, dX⟩ − ½∫|𝓛|² ds along one bridge sample. The dW part uses
/// left-point sums, the K ds part and ∫|𝓛|² the trapezoid rule, and every
/// term involving the s^{1/2−H} singular part is integrated exactly per cell.
pub fn girsanov_exponent(lpath: &GirsanovIntegrand, bridge: &BridgePath, h: f64) -> f64 {
    let reg = &lpath.regular;
    let sing = &lpath.singular;
    let d = reg.dim();
    let dt = reg.dt();
    let has_sing = sing.iter().any(|&c| c != 0.0);
    let mut e = 0.0;
    for k in 0..reg.steps() {
        let (r0, r1) = (reg.row(k), reg.row(k + 1));
        let dw: Vec<f64> = (0..d).map(|j| bridge.w.row(k + 1)[j] - bridge.w.row(k)[j]).collect();
        let kk = &bridge.k[k * d..(k + 1) * d];
        for j in 0..d {
            e += r0[j] * dw[j] + 0.5 * (r0[j] + r1[j]) * kk[j] * dt;
            e -= 0.25 * (r0[j] * r0[j] + r1[j] * r1[j]) * dt;
        }
        if has_sing {
            let t = k as f64 * dt;
            let s1 = cell_integral(t, dt, 1.5 - h);
            let s2 = cell_integral(t, dt, 2.0 - 2.0 * h);
            for j in 0..d {
                let dx = bridge.x.row(k + 1)[j] - bridge.x.row(k)[j];
                e += sing[j] * s1 / dt * dx;
                e -= 0.5 * (r0[j] + r1[j]) * sing[j] * s1 + 0.5 * sing[j] * sing[j] * s2;
            }
        }
    }
    e
}

#[derive(Clone, Debug, Serialize)]
pub struct GirsanovEstimate {
    pub g: f64,
    pub stderr: f64,
    pub samples: usize,
    /// Share of the total weight carried by the largest 1% of samples.
    pub top_share: f64,
    pub heavy_tail: bool,
}

/// Heavy-tail guard threshold on the top-1% weight share.
pub const HEAVY_TAIL_SHARE: f64 = 0.5;

pub(crate) fn summarize_weights(w: &mut [f64]) -> GirsanovEstimate {
    let n = w.len();
    let mean = w.iter().sum::<f64>() / n as f64;
    let var = if n > 1 { w.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
    w.sort_by(|a, b| b.total_cmp(a));
    let top = n.div_ceil(100);
    let total: f64 = w.iter().sum();
    let top_share = if total > 0.0 { w[..top].iter().sum::<f64>() / total } else { 0.0 };
    GirsanovEstimate { g: mean, stderr: (var / n as f64).sqrt(), samples: n, top_share, heavy_tail: n >= 100 && top_share > HEAVY_TAIL_SHARE }
}

/// Endpoint z = σ⁻¹(y − l(t0)) of the Liouville fBm that reaches y.
pub fn endpoint_for(model: &NoiseModel, l: &Path, y: &[f64]) -> Vec<f64> {
    let d = y.len();
    let lt = l.row(l.steps());
    let sinv = model.sigma_inv();
    (0..d).map(|i| (0..d).map(|j| sinv[(i, j)] * (y[j] - lt[j])).sum()).collect()
}

/// Exponential weights of the bridge replicates `reps` ending at y.
pub fn girsanov_weights(drift: &Drift, model: &NoiseModel, l: &Path, y: &[f64], sampler: &BridgeSampler, reps: Range<u32>, seed: u64) -> Result<Vec<f64>> {
    let z = endpoint_for(model, l, y);
    let mut w = Vec::with_capacity(reps.len());
    for r in reps {
        let b = sampler.sample(&z, seed, r)?;
        let lp = girsanov_l(drift, model, l, &b)?;
        let e = girsanov_exponent(&lp, &b, model.h());
        let v = e.exp();
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("Girsanov exponent {e} at replicate {r}")));
        }
        w.push(v);
    }
    Ok(w)
}

/// G = E[exp(∫⟨𝓛, dX⟩ − ½∫|𝓛|²)] over the bridge conditioned to reach y.
pub fn girsanov_factor(drift: &Drift, model: &NoiseModel, l: &Path, y: &[f64], sampler: &BridgeSampler, n_samples: usize, seed: u64) -> Result<GirsanovEstimate> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("need at least one bridge sample".into()));
    }
    let mut w = girsanov_weights(drift, model, l, y, sampler, 0..n_samples as u32, seed)?;
    Ok(summarize_weights(&mut w))
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityPoint {
    pub y: Vec<f64>,
    pub density: f64,
    pub stderr: f64,
    pub heavy_tail: bool,
}

/// Gaussian factor of the transition density: the law of σB̃_{t0} at y − l(t0).
pub fn gaussian_prefactor(model: &NoiseModel, l: &Path, y: &[f64], variance: f64) -> f64 {
    let z = endpoint_for(model, l, y);
    let det = model.sigma().determinant().abs();
    let q: f64 = z.iter().map(|v| v * v).sum();
    (-0.5 * q / variance).exp() / ((2.0 * std::f64::consts::PI * variance).powf(0.5 * z.len() as f64) * det)
}

/// Density of the solution at t0 started from the deterministic part `l`,
/// written as a Gaussian factor times the Girsanov factor G.
pub fn transition_density(
    drift: &Drift,
    model: &NoiseModel,
    l: &Path,
    y_grid: &[Vec<f64>],
    sampler: &BridgeSampler,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<DensityPoint>> {
    let v = sampler.spec().endpoint_variance();
    let mut out = Vec::with_capacity(y_grid.len());
    for y in y_grid {
        let pre = gaussian_prefactor(model, l, y, v);
        let g = girsanov_factor(drift, model, l, y, sampler, n_samples, seed)?;
        out.push(DensityPoint { y: y.clone(), density: pre * g.g, stderr: pre * g.stderr, heavy_tail: g.heavy_tail });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::sampler::BridgeSpec;
    use super::*;

    fn setup(h: f64) -> (NoiseModel, BridgeSampler, Path) {
        let model = NoiseModel::scalar(h, 1.0, 1).unwrap();
        let spec = BridgeSpec::new(vec![0.0], 0.25, h, 0.25 / 64.0).unwrap();
        let l = Path::from_fn(spec.dt, 1, 64, |_| vec![0.3]);
        (model, BridgeSampler::new(spec), l)
    }

    #[test]
    fn zero_drift_gives_unit_factor_exactly() {
        for h in [0.3, 0.5, 0.7] {
            let (model, s, l) = setup(h);
            let g = girsanov_factor(&Drift::zero(1), &model, &l, &[0.8], &s, 50, 1).unwrap();
            assert_eq!(g.g, 1.0);
            assert_eq!(g.stderr, 0.0);
        }
    }

    #[test]
    fn constant_drift_integrand_is_deterministic() {
        let h = 0.3;
        let c = 0.7;
        let (model, s, l) = setup(h);
        let b = s.sample(&[0.4], 2, 0).unwrap();
        let lp = girsanov_l(&Drift::constant(vec![c]), &model, &l, &b).unwrap();
        let k = gamma(h + 0.5) * gamma(1.5 - h);
        for i in [1usize, 10, 64] {
            let t = i as f64 * b.x.dt();
            let want = c / model.rho() * t.powf(0.5 - h) / k;
            assert!((lp.regular.row(i)[0] - want).abs() < 1e-12 * want.abs().max(1.0));
        }
    }

    #[test]
    fn singular_coefficient_vanishes_when_drift_vanishes_at_start() {
        let (model, s, _) = setup(0.7);
        let l = Path::zeros(s.spec().dt, 1, 64);
        let b = s.sample(&[0.4], 2, 0).unwrap();
        let lp = girsanov_l(&Drift::double_well(1), &model, &l, &b).unwrap();
        assert_eq!(lp.singular[0], 0.0);
    }

    #[test]
    fn zero_drift_density_is_gaussian() {
        let (model, s, l) = setup(0.3);
        let v = s.spec().endpoint_variance();
        let ys: Vec<Vec<f64>> = (-200..=200).map(|i| vec![0.3 + i as f64 * 0.02]).collect();
        let p = transition_density(&Drift::zero(1), &model, &l, &ys, &s, 2, 0).unwrap();
        let total: f64 = p.iter().map(|q| q.density * 0.02).sum();
        assert!((total - 1.0).abs() < 1e-6, "{total}");
        let peak = 1.0 / (2.0 * std::f64::consts::PI * v).sqrt();
        assert!((p[200].density - peak).abs() < 1e-14);
    }
}
