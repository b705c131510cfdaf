use serde::Serialize;

use super::girsanov::{gaussian_prefactor, girsanov_weights, summarize_weights};
use super::sampler::{BridgeSampler, BridgeSpec};
use crate::error::{grid_index, Error, Result};
use crate::flow::{Drift, Stepper};
use crate::noise::{history_operator, mvn_operator, NoiseModel, OperatorOptions};
use crate::path::{Path, PastPath};
use crate::rng;

/// Stream tag for history replicates.
pub const HISTORY_TAG: u32 = 0xB100_0000;

/// Grid points below this fraction of the peak density never trigger a halving.
pub const BULK_FRACTION: f64 = 0.01;

/// Minimum number of history samples for a stationary estimate.
pub const MIN_HISTORY: usize = 200;

#[derive(Clone, Debug)]
pub struct HarvestConfig {
    pub samples: usize,
    /// Length of the Wiener past behind each sample.
    pub t_past: f64,
    /// Equilibration time of the state before time 0.
    pub t_run: f64,
    pub dt: f64,
    /// Horizon of the history term l.
    pub t0: f64,
}

impl HarvestConfig {
    pub fn new(samples: usize, dt: f64, t0: f64) -> Self {
        Self { samples, t_past: 64.0, t_run: 8.0, dt, t0 }
    }
}

/// State at time 0 and the deterministic part l = x + σ𝒫(ω⁻) on [0, t0].
#[derive(Clone, Debug)]
pub struct HistorySample {
    pub x: Vec<f64>,
    pub l: Path,
}

#[derive(Clone, Debug, Serialize)]
pub struct HarvestReport {
    pub samples: usize,
    /// Largest truncation estimate of the fBm on [−t_run, 0].
    pub run_tail_estimate: f64,
    /// Largest truncation estimate of the history term on [0, t0].
    pub history_tail_estimate: f64,
}

/// Independent draws of (x, ω⁻): each replicate has its own Wiener past on
/// [−t_past, 0]; the fBm 𝒟_H ω⁻ drives the equation over [−t_run, 0] from
/// x = 0, and the same ω⁻ gives the history term.
pub fn harvest_history(drift: &Drift, model: &NoiseModel, cfg: &HarvestConfig, seed: u64) -> Result<(Vec<HistorySample>, HarvestReport)> {
    let d = drift.dim();
    let dt = cfg.dt;
    let n_past = grid_index(cfg.t_past, dt)?;
    let n_run = grid_index(cfg.t_run, dt)?;
    if n_run >= n_past {
        return Err(Error::InvalidArgument(format!("t_run = {} must be shorter than t_past = {}", cfg.t_run, cfg.t_past)));
    }
    // The window is finite; its truncation error is reported, not enforced.
    let opts = OperatorOptions { tolerance: f64::INFINITY, window: Some(cfg.t_run) };
    let mut out = Vec::with_capacity(cfg.samples);
    let mut report = HarvestReport { samples: cfg.samples, run_tail_estimate: 0.0, history_tail_estimate: 0.0 };
    let sq = dt.sqrt();
    for i in 0..cfg.samples {
        let mut data = vec![0.0; d * (n_past + 1)];
        for j in 0..d {
            let mut r = rng::stream2(seed, i as u32, HISTORY_TAG + j as u32);
            for k in 1..=n_past {
                data[k * d + j] = data[(k - 1) * d + j] + sq * rng::normal(&mut r);
            }
        }
        let omega = PastPath::new(dt, d, data)?;
        let fbm = mvn_operator(&omega, model.h(), &opts)?;
        report.run_tail_estimate = report.run_tail_estimate.max(fbm.tail_estimate);
        let b = fbm.value;
        let start = b.row(n_run).to_vec();
        let noise_at = |q: usize| -> Vec<f64> { b.row(n_run - q).iter().zip(&start).map(|(u, v)| u - v).collect() };
        let x0 = vec![0.0; d];
        let mut st = Stepper::new(drift, model, &x0, &noise_at(0));
        for q in 1..=n_run {
            st.step(&noise_at(q), dt, q as f64 * dt)?;
        }
        let x = st.state().to_vec();
        let hist = history_operator(&omega, model.h(), cfg.t0, dt, &OperatorOptions { tolerance: f64::INFINITY, window: None })?;
        report.history_tail_estimate = report.history_tail_estimate.max(hist.tail_estimate);
        let sigma = model.sigma();
        let mut l = Path::zeros(dt, d, hist.value.steps());
        for k in 0..l.len() {
            let p = hist.value.row(k);
            let row = l.row_mut(k);
            for a in 0..d {
                row[a] = x[a] + (0..d).map(|c| sigma[(a, c)] * p[c]).sum::<f64>();
            }
        }
        out.push(HistorySample { x, l });
    }
    Ok((out, report))
}

#[derive(Clone, Debug, Serialize)]
pub struct StationaryDensity {
    pub y: Vec<Vec<f64>>,
    pub density: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Horizon actually used after any automatic halving.
    pub t0: f64,
    pub halvings: usize,
    /// Grid points whose pooled weights still tripped the heavy-tail guard.
    pub heavy_tail: Vec<bool>,
}

/// p̃_∞(y) ≈ mean over history samples of the bridge transition density
/// started from each sample's l. When the pooled Girsanov weights at some y
/// in the bulk are heavy-tailed, t0 is halved (at most `max_halvings` times).
#[allow(clippy::too_many_arguments)]
pub fn stationary_density_via_bridge(
    drift: &Drift,
    model: &NoiseModel,
    history: &[HistorySample],
    y_grid: &[Vec<f64>],
    t0: f64,
    per_sample: usize,
    seed: u64,
    max_halvings: usize,
) -> Result<StationaryDensity> {
    if history.len() < MIN_HISTORY {
        return Err(Error::Insufficient(format!("{} history samples, need {MIN_HISTORY}", history.len())));
    }
    let dt = history[0].l.dt();
    let mut t0 = t0;
    let mut halvings = 0;
    loop {
        let n = grid_index(t0, dt)?;
        if n > history[0].l.steps() {
            return Err(Error::Horizon { requested: t0, available: history[0].l.horizon() });
        }
        let spec = BridgeSpec::new(vec![0.0; drift.dim()], t0, model.h(), dt)?;
        let sampler = BridgeSampler::new(spec);
        let v = sampler.spec().endpoint_variance();
        let m = history.len() as f64;
        let mut dens = Vec::with_capacity(y_grid.len());
        let mut errs = Vec::with_capacity(y_grid.len());
        let mut flags = Vec::with_capacity(y_grid.len());
        for y in y_grid {
            let mut per = Vec::with_capacity(history.len());
            let mut pooled = Vec::with_capacity(history.len() * per_sample);
            for (i, hs) in history.iter().enumerate() {
                let l = hs.l.truncate(n);
                let pre = gaussian_prefactor(model, &l, y, v);
                let first = (i * per_sample) as u32;
                let w = girsanov_weights(drift, model, &l, y, &sampler, first..first + per_sample as u32, seed)?;
                per.push(pre * w.iter().sum::<f64>() / w.len() as f64);
                pooled.extend(w);
            }
            let mean = per.iter().sum::<f64>() / m;
            let var = per.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (m - 1.0);
            dens.push(mean);
            errs.push((var / m).sqrt());
            flags.push(summarize_weights(&mut pooled).heavy_tail);
        }
        // only grid points that carry visible mass can trigger a halving
        let top = dens.iter().copied().fold(0.0, f64::max);
        let tripped = flags.iter().zip(&dens).any(|(&f, &p)| f && p >= BULK_FRACTION * top);
        if !tripped || halvings >= max_halvings || grid_index(t0 / 2.0, dt).is_err() || (t0 / 2.0 / dt).round() < 2.0 {
            return Ok(StationaryDensity { y: y_grid.to_vec(), density: dens, stderr: errs, t0, halvings, heavy_tail: flags });
        }
        t0 /= 2.0;
        halvings += 1;
    }
}
