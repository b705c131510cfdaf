use nalgebra::DMatrix;

use fracrds::flow::{cocycle_residual, Drift};
use fracrds::lyapunov::{estimate_top_lyapunov, local_stability_probe, sigma_sweep, LyapunovConfig, SweepConfig};
use fracrds::noise::{NoiseModel, OperatorOptions};
use fracrds::rng;
use fracrds::Result;

use super::noise::brownian_past;
use super::Check;

pub(super) fn cocycle(seed: u64) -> Result<Vec<Check>> {
    let dt = 1e-3;
    let opts = OperatorOptions { tolerance: f64::INFINITY, window: None };
    let (t, s) = (0.4, 0.6);
    let mut checks = Vec::new();
    for h in [0.3, 0.7] {
        let model = NoiseModel::scalar(h, 1.0, 1)?;
        let mut worst: f64 = 0.0;
        let mut worst_zero: f64 = 0.0;
        for rep in 0..3 {
            let mut r = rng::stream2(seed, 0xC4, rep);
            let wm = brownian_past(&mut r, dt, 1, 50_000);
            let wp = brownian_past(&mut r, dt, 1, 1000);
            for x in [-1.0, 0.5] {
                worst = worst.max(cocycle_residual(&Drift::double_well(1), &model, &[x], &wm, &wp, t, s, &opts)?);
                worst_zero = worst_zero.max(cocycle_residual(&Drift::zero(1), &model, &[x], &wm, &wp, t, s, &opts)?);
            }
        }
        checks.push(Check::at_most(format!("H={h} double-well cocycle residual"), worst, 10.0 * dt));
        checks.push(Check::at_most(format!("H={h} zero-drift cocycle residual"), worst_zero, 1e-12));
    }
    Ok(checks)
}

fn scalar_linear(a: f64) -> Result<Drift> {
    Drift::linear(DMatrix::from_element(1, 1, -a))
}

pub(super) fn lyapunov_oracle(seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let mut cfg = LyapunovConfig::new(120.0, 1e-2, 1);
    cfg.burn_in = 20.0;
    for h in [0.3, 0.7] {
        let model = NoiseModel::scalar(h, 1.0, 1)?;
        for a in [0.5, 2.0] {
            let drift = scalar_linear(a)?;
            let est = estimate_top_lyapunov(&drift, &model, &cfg, seed, None)?;
            checks.push(Check::at_most(format!("H={h} a={a} |lambda1 + a|"), (est.lambda1_hat + a).abs(), 1e-3));
            checks.push(Check::holds(format!("H={h} a={a} below Gronwall ceiling"), est.below_gronwall(&drift, 0.0)));
        }
    }
    // Grönwall ceiling on nonlinear drifts, with the ceiling C3 from the drift
    let mut cfg = LyapunovConfig::new(120.0, 1e-3, 1);
    cfg.burn_in = 20.0;
    for (s, h) in [(0.5, 0.3), (5.0, 0.7)] {
        let drift = Drift::double_well(1);
        let est = estimate_top_lyapunov(&drift, &NoiseModel::scalar(h, s, 1)?, &cfg, seed, None)?;
        checks.push(
            Check::at_most(format!("double well sigma={s} H={h} lambda1 - C3"), est.lambda1_hat - drift.constants.c3, 3.0 * est.stderr)
                .with(format!("lambda1 = {:.4} +- {:.4}", est.lambda1_hat, est.stderr)),
        );
    }
    let drift = Drift::rotational();
    let mut cfg = LyapunovConfig::new(120.0, 1e-3, 2);
    cfg.burn_in = 20.0;
    cfg.probes = 2;
    let est = estimate_top_lyapunov(&drift, &NoiseModel::scalar(0.7, 1.0, 2)?, &cfg, seed, None)?;
    checks.push(
        Check::at_most("rotational H=0.7 lambda1 - C3", est.lambda1_hat - drift.constants.c3, 3.0 * est.stderr)
            .with(format!("lambda1 = {:.4} +- {:.4}", est.lambda1_hat, est.stderr)),
    );
    Ok(checks)
}

/// Long-run configuration shared by the sweep and the stability probe.
pub(crate) fn sweep_config(seed: u64) -> SweepConfig {
    let mut lyapunov = LyapunovConfig::new(220.0, 1e-3, 1);
    lyapunov.burn_in = 20.0;
    SweepConfig { lyapunov, radius: 2.0, seeds: vec![seed, seed + 1], thin: 10 }
}

pub(crate) const SWEEP_SIGMAS: [f64; 4] = [0.5, 1.0, 2.0, 5.0];

pub(super) fn sigma_sweep_double_well(seed: u64) -> Result<Vec<Check>> {
    let drift = Drift::double_well(1);
    let sigmas: Vec<DMatrix<f64>> = SWEEP_SIGMAS.iter().map(|&s| DMatrix::from_element(1, 1, s)).collect();
    let cfg = sweep_config(seed);
    let mut checks = Vec::new();
    for h in [0.3, 0.7] {
        let table = sigma_sweep(&drift, h, &sigmas, None, &cfg)?;
        let last = table.rows.last().expect("non-empty sweep");
        checks.push(
            Check::holds(format!("H={h} lambda1 < 0 at 3 sigma for |sigma| = 5"), table.last_negative(3.0))
                .with(format!("lambda1 = {:.4} +- {:.4}", last.lambda1, last.stderr)),
        );
        let masses: Vec<String> = table.rows.iter().map(|r| format!("{:.3}+-{:.3}", r.mass_in_ball, r.mass_stderr)).collect();
        checks.push(Check::holds(format!("H={h} ball mass decreasing beyond 2 stderr"), table.mass_decreases(2.0)).with(masses.join(" ")));
        checks.push(Check::holds(format!("H={h} lambda1 <= bound + 3 stderr"), table.bound_holds(3.0)));
        for row in &table.rows {
            checks.push(Check::at_most(
                format!("H={h} sigma={} lambda1 - C3", row.sigma_norm),
                row.lambda1 - drift.constants.c3,
                3.0 * row.stderr,
            ));
        }
    }
    Ok(checks)
}

pub(super) fn stability(seed: u64) -> Result<Vec<Check>> {
    let drift = Drift::double_well(1);
    let cfg = sweep_config(seed);
    let sigma = *SWEEP_SIGMAS.last().expect("non-empty");
    let mut checks = Vec::new();
    for h in [0.3, 0.7] {
        let model = NoiseModel::scalar(h, sigma, 1)?;
        let prior = estimate_top_lyapunov(&drift, &model, &cfg.lyapunov, seed, None)?;
        let nu = -prior.lambda1_hat / 2.0;
        let mut worst: f64 = 0.0;
        let mut flagged = 0;
        for k in 0..10 {
            let rep = local_stability_probe(&drift, &model, &prior, &[0.5], 1e-2, nu, 50.0, cfg.lyapunov.dt, seed + 100 + k, 2)?;
            worst = worst.max(rep.max_weighted_separation / rep.initial_separation);
            flagged += usize::from(rep.flagged);
        }
        checks.push(
            Check::at_most(format!("H={h} sup e^(nu t) separation / initial over 10 seeds"), worst, 10.0)
                .with(format!("nu = {nu:.4}, lambda1 = {:.4}, flagged runs {flagged}", prior.lambda1_hat)),
        );
    }
    Ok(checks)
}
