use serde::Serialize;

use super::{solve_flow, Drift, Trajectory};
use crate::error::{Error, Result};
use crate::noise::{sample_fbm_replicate, NoiseModel};
use crate::stats::quantile;

#[derive(Clone, Debug, Serialize)]
pub struct AprioriReport {
    pub replicates: usize,
    /// L fitted on the even replicates (25% margin over the largest ratio).
    pub fitted_l: f64,
    /// 99.9% empirical quantile of Σ̂ over replicates.
    pub envelope: f64,
    /// Odd replicates inside the envelope with sup|Φ| > L(1 + |x|^N + Σ̂).
    pub violations: usize,
    /// Per starting point: max over replicates of sup|Φ|/(1 + |x|^N).
    pub growth_ratio: Vec<f64>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Checks sup_{t≤t₀}|Φ^t(x)| ≤ L(1 + |x|^N + Σ̂(ω)) where Σ̂(ω) = sup_t |σω(t)|.
/// `runs[r][i]` is the trajectory from the i-th starting point under the
/// r-th noise replicate; all entries of a replicate share the driving noise.
pub fn a_priori_bound_check(drift: &Drift, model: &NoiseModel, runs: &[Vec<Trajectory>]) -> Result<AprioriReport> {
    if runs.len() < 100 {
        return Err(Error::Insufficient(format!("{} replicates, need at least 100", runs.len())));
    }
    let n_exp = drift.constants.growth_exponent;
    let sigma = model.sigma();
    let d = drift.dim();
    let noise_sup: Vec<f64> = runs
        .iter()
        .map(|reps| {
            let w = &reps[0].driving_noise;
            (0..w.len())
                .map(|k| {
                    let sw: Vec<f64> = (0..d).map(|i| (0..d).map(|j| sigma[(i, j)] * w.row(k)[j]).sum()).collect();
                    norm(&sw)
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let envelope = quantile(&noise_sup, 0.999);
    let sup_phi = |tr: &Trajectory| (0..tr.path.len()).map(|k| norm(tr.path.row(k))).fold(0.0, f64::max);
    let mut l: f64 = 0.0;
    let n_x = runs[0].len();
    let mut growth = vec![0.0f64; n_x];
    for (r, reps) in runs.iter().enumerate() {
        for (i, tr) in reps.iter().enumerate() {
            let sp = sup_phi(tr);
            let base = 1.0 + norm(&tr.x0).powf(n_exp);
            growth[i] = growth[i].max(sp / base);
            if r % 2 == 0 {
                l = l.max(sp / (base + noise_sup[r]));
            }
        }
    }
    let fitted_l = 1.25 * l;
    let mut violations = 0;
    for (r, reps) in runs.iter().enumerate().filter(|(r, _)| r % 2 == 1) {
        if noise_sup[r] > envelope {
            continue;
        }
        for tr in reps {
            let base = 1.0 + norm(&tr.x0).powf(n_exp) + noise_sup[r];
            if sup_phi(tr) > fitted_l * base {
                violations += 1;
            }
        }
    }
    Ok(AprioriReport { replicates: runs.len(), fitted_l, envelope, violations, growth_ratio: growth })
}

/// Trajectories on [0, t₀] from every starting point in `xs` under
/// `replicates` independent fBm draws.
pub fn simulate_apriori_runs(
    drift: &Drift,
    model: &NoiseModel,
    xs: &[Vec<f64>],
    t0: f64,
    dt: f64,
    replicates: usize,
    seed: u64,
) -> Result<Vec<Vec<Trajectory>>> {
    (0..replicates)
        .map(|r| {
            let noise = sample_fbm_replicate(model, t0, dt, seed, r as u32)?;
            xs.iter().map(|x| solve_flow(drift, model, x, &noise, dt)).collect()
        })
        .collect()
}
