use nalgebra::DMatrix;

use fracrds::bridge::{girsanov_factor, transition_density, BridgeSampler, BridgeSpec, LiouvilleSampler};
use fracrds::flow::{solve_flow, Drift};
use fracrds::noise::NoiseModel;
use fracrds::stats::{linear_fit, mean_se};
use fracrds::{rng, Path, Result};

use super::Check;

pub(super) fn bridge_sampler(seed: u64) -> Result<Vec<Check>> {
    let (z, t0) = (0.8, 0.25);
    let mut checks = Vec::new();
    for h in [0.3, 0.7] {
        let spec = BridgeSpec::new(vec![z], t0, h, t0 / 32.0)?;
        let sampler = BridgeSampler::new(spec.clone());
        let n = spec.steps();
        let mut nodes = vec![Vec::with_capacity(10_000); n + 1];
        for r in 0..10_000 {
            let p = sampler.sample(&[z], seed, r)?;
            for (k, v) in nodes.iter_mut().enumerate() {
                v.push(p.x.row(k)[0]);
            }
        }
        let profile = spec.mean_profile();
        let mut worst: f64 = 0.0;
        for k in 1..=n {
            let (m, se) = mean_se(&nodes[k]);
            worst = worst.max((m - z * profile[k]).abs() / se);
        }
        checks.push(Check::at_most(format!("H={h} mean path max |mean - exact| / SE"), worst, 3.0));
    }
    for h in [0.3, 0.5, 0.7] {
        let mut logs = Vec::new();
        let mut rms = Vec::new();
        for n in [16usize, 32, 64, 128, 256, 512] {
            let spec = BridgeSpec::new(vec![z], t0, h, t0 / n as f64)?;
            let sampler = BridgeSampler::new(spec.clone());
            let mut sq = 0.0;
            let reps = 4000;
            for r in 0..reps {
                let p = sampler.sample(&[z], seed + 1, r)?;
                sq += (sampler.endpoint_functional(&p)[0] - z).powi(2);
            }
            logs.push(spec.dt.ln());
            rms.push((sq / reps as f64).sqrt());
        }
        let (_, order, _) = linear_fit(&logs, &rms.iter().map(|e| e.ln()).collect::<Vec<_>>());
        checks.push(Check::at_least(format!("H={h} endpoint functional order"), order, h.min(0.5) - 0.1).with(format!("rms errors {}", super::sci(&rms))));
    }
    Ok(checks)
}

fn constant_path(dt: f64, steps: usize, x0: f64) -> Path {
    Path::from_fn(dt, 1, steps, |_| vec![x0])
}

pub(super) fn girsanov_density(seed: u64) -> Result<Vec<Check>> {
    let t0 = 0.25;
    let x0 = 0.2;
    let mut checks = Vec::new();
    for h in [0.3, 0.5, 0.7] {
        let model = NoiseModel::scalar(h, 1.0, 1)?;
        let sampler = BridgeSampler::new(BridgeSpec::new(vec![0.0], t0, h, t0 / 64.0)?);
        let l = constant_path(t0 / 64.0, 64, x0);
        let mut g_off: f64 = 0.0;
        for y in [-1.0, 0.2, 0.9] {
            let g = girsanov_factor(&Drift::zero(1), &model, &l, &[y], &sampler, 20, seed)?;
            g_off = g_off.max((g.g - 1.0).abs()).max(g.stderr);
        }
        checks.push(Check::exact(format!("H={h} zero drift G = 1"), g_off, 0.0));
        let sd = sampler.spec().endpoint_variance().sqrt();
        let m = 800;
        let dy = 16.0 * sd / m as f64;
        let ys: Vec<Vec<f64>> = (0..=m).map(|k| vec![x0 - 8.0 * sd + k as f64 * dy]).collect();
        let p = transition_density(&Drift::zero(1), &model, &l, &ys, &sampler, 1, seed)?;
        let mass: f64 = p.iter().enumerate().map(|(k, q)| if k == 0 || k == m { 0.5 } else { 1.0 } * q.density).sum::<f64>() * dy;
        checks.push(Check::at_most(format!("H={h} zero drift density mass - 1"), (mass - 1.0).abs(), 1e-3));
    }

    // linear drift: bridge density against a histogram of the solver
    let h = 0.3;
    let model = NoiseModel::scalar(h, 1.0, 1)?;
    let drift = Drift::linear(DMatrix::from_element(1, 1, -1.0))?;
    let fine = 128;
    let liouville = LiouvilleSampler::new(h, fine, t0 / fine as f64)?;
    let (lo, width, bins) = (-2.0, 0.1, 40);
    let mut counts = vec![0u64; bins];
    let paths = 100_000;
    let mut r = rng::stream2(seed, 0xC10, 0);
    for _ in 0..paths {
        let noise = liouville.sample(1, &mut r);
        let y = solve_flow(&drift, &model, &[x0], &noise, t0 / fine as f64)?.path.row(fine)[0];
        let b = ((y - lo) / width).floor();
        if b >= 0.0 && (b as usize) < bins {
            counts[b as usize] += 1;
        }
    }
    let hist: Vec<f64> = counts.iter().map(|&c| c as f64 / (paths as f64 * width)).collect();
    let centers: Vec<Vec<f64>> = (0..bins).map(|b| vec![lo + (b as f64 + 0.5) * width]).collect();
    let sampler = BridgeSampler::new(BridgeSpec::new(vec![0.0], t0, h, t0 / 64.0)?);
    let dens = transition_density(&drift, &model, &constant_path(t0 / 64.0, 64, x0), &centers, &sampler, 2000, seed)?;
    let peak = hist.iter().copied().fold(0.0, f64::max);
    let sup = dens.iter().zip(&hist).map(|(p, q)| (p.density - q).abs()).fold(0.0, f64::max);
    checks.push(Check::at_most("linear drift H=0.3 sup |bridge - histogram| / peak", sup / peak, 0.05).with(format!("peak {peak:.4}")));
    Ok(checks)
}
