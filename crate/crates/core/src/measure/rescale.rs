use serde::Serialize;

use super::density::DensityConfig;
use crate::error::Result;
use crate::flow::Drift;
use crate::noise::NoiseModel;
use crate::sim;
use crate::stats::batch_means;

/// Time-averaged π̂(B(0,R)) pooled over seeds; the standard error combines
/// per-seed batch-means errors (20 blocks each).
pub fn ball_mass_time_average(drift: &Drift, model: &NoiseModel, cfg: &DensityConfig, seeds: &[u64], r: f64) -> Result<(f64, f64)> {
    let d = drift.dim();
    let spec = cfg.run_spec();
    let mut means = Vec::with_capacity(seeds.len());
    let mut var = 0.0;
    for &s in seeds {
        let run = sim::run(drift, model, &spec, s, 0, None)?;
        let ind: Vec<f64> = run.states.chunks_exact(d).map(|y| f64::from(y.iter().map(|v| v * v).sum::<f64>() <= r * r)).collect();
        let (m, se) = batch_means(&ind, 20);
        means.push(m);
        var += se * se;
    }
    let n = seeds.len() as f64;
    Ok((means.iter().sum::<f64>() / n, var.sqrt() / n))
}

#[derive(Clone, Debug, Serialize)]
pub struct RescaleReport {
    pub sigma_norm: f64,
    pub radius: f64,
    pub mass_original: f64,
    pub stderr_original: f64,
    pub mass_rescaled: f64,
    pub stderr_rescaled: f64,
    pub difference: f64,
    pub combined_stderr: f64,
}

impl RescaleReport {
    pub fn within(&self, k: f64) -> bool {
        self.difference <= k * self.combined_stderr
    }
}

/// Compares π̂^σ(B(0,R)) for dY = F(Y)dt + σ dB with π̂(B(0,R/‖σ‖)) for the
/// rescaled equation dZ = F^σ(Z)dt + ‖σ‖⁻¹σ dB, F^σ(ξ) = F(‖σ‖ξ)/‖σ‖.
/// `rescaled_seeds` may equal `seeds` to couple the two runs.
pub fn rescale_density_check(
    drift: &Drift,
    model: &NoiseModel,
    r: f64,
    cfg: &DensityConfig,
    seeds: &[u64],
    rescaled_seeds: &[u64],
) -> Result<RescaleReport> {
    let s = model.sigma_norm();
    let (m1, e1) = ball_mass_time_average(drift, model, cfg, seeds, r)?;
    let rdrift = drift.rescaled(s)?;
    let rmodel = NoiseModel::new(model.h(), model.unit_sigma())?;
    let mut rcfg = cfg.clone();
    rcfg.x0 = cfg.x0.iter().map(|v| v / s).collect();
    let (m2, e2) = ball_mass_time_average(&rdrift, &rmodel, &rcfg, rescaled_seeds, r / s)?;
    Ok(RescaleReport {
        sigma_norm: s,
        radius: r,
        mass_original: m1,
        stderr_original: e1,
        mass_rescaled: m2,
        stderr_rescaled: e2,
        difference: (m1 - m2).abs(),
        combined_stderr: (e1 * e1 + e2 * e2).sqrt(),
    })
}
