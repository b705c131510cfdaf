use nalgebra::DMatrix;

use fracrds::flow::{solve_flow, Drift};
use fracrds::measure::{fou_covariance, rescale_density_check, DensityConfig};
use fracrds::noise::{FbmSampler, NoiseModel};
use fracrds::stats::mean_se;
use fracrds::{rng, Path, Result};

use super::Check;

pub(super) fn rescaling(seed: u64) -> Result<Vec<Check>> {
    let drift = Drift::double_well(1);
    let mut cfg = DensityConfig::new(220.0, 1e-3, 1);
    cfg.burn_in = 20.0;
    cfg.thin = 10;
    let mut checks = Vec::new();
    for h in [0.3, 0.7] {
        let model = NoiseModel::scalar(h, 4.0, 1)?;
        let rep = rescale_density_check(&drift, &model, 2.0, &cfg, &[seed, seed + 1], &[seed + 2, seed + 3])?;
        checks.push(Check::at_most(format!("H={h} |sigma|=4 ball-mass difference"), rep.difference, 3.0 * rep.combined_stderr).with(format!(
            "original {:.4} +- {:.4}, rescaled {:.4} +- {:.4}",
            rep.mass_original, rep.stderr_original, rep.mass_rescaled, rep.stderr_rescaled
        )));
    }
    Ok(checks)
}

/// Var(Y_t) of dY = −Y dt + dB from Y_0 = 0 over independent replicates.
fn ou_variance_mc(h: f64, t: f64, n: usize, reps: usize, seed: u64) -> Result<(f64, f64)> {
    let dt = t / n as f64;
    let drift = Drift::linear(DMatrix::from_element(1, 1, -1.0))?;
    let model = NoiseModel::scalar(h, 1.0, 1)?;
    let sampler = FbmSampler::new(h, n, dt)?;
    let mut sq = Vec::with_capacity(reps);
    for r in 0..reps {
        let noise = Path::new(dt, 1, sampler.sample(&mut rng::stream2(seed, r as u32, 0xC8)))?;
        let traj = solve_flow(&drift, &model, &[0.0], &noise, dt)?;
        sq.push(traj.path.row(n)[0].powi(2));
    }
    Ok(mean_se(&sq))
}

pub(super) fn fou(seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let exact = (1.0 - (-2.0f64).exp()) / 2.0;
    let q = fou_covariance(&NoiseModel::scalar(0.5, 1.0, 1)?, 1.0)[(0, 0)];
    checks.push(Check::at_most("H=0.5 quadrature vs (1 - e^-2)/2", (q - exact).abs(), 1e-8));
    for h in [0.5, 0.7] {
        let q = fou_covariance(&NoiseModel::scalar(h, 1.0, 1)?, 1.0)[(0, 0)];
        let (m, se) = ou_variance_mc(h, 1.0, 256, 20_000, seed)?;
        checks.push(Check::at_most(format!("H={h} Monte Carlo vs quadrature in SE"), (m - q).abs() / se, 3.0).with(format!("MC {m:.5} +- {se:.5}, quadrature {q:.6}")));
    }
    Ok(checks)
}
