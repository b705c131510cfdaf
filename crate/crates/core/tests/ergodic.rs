use nalgebra::{DMatrix, DVector};

use fracrds::bridge::{harvest_history, stationary_density_via_bridge, HarvestConfig};
use fracrds::flow::{a_priori_bound_check, simulate_apriori_runs, solve_flow, tangent_flow, Drift};
use fracrds::lyapunov::{estimate_top_lyapunov, LyapunovConfig};
use fracrds::measure::{ball_mass_time_average, estimate_invariant_density, tail_fit, DensityConfig};
use fracrds::noise::{sample_fbm_replicate, NoiseModel};
use fracrds::sim::{self, RunSpec};
use fracrds::stats::mean_se;

fn gaussian(y: f64, var: f64) -> f64 {
    (-0.5 * y * y / var).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

#[test]
fn bridge_stationary_density_of_ou_is_gaussian() {
    let drift = Drift::linear(DMatrix::from_element(1, 1, -1.0)).unwrap();
    let model = NoiseModel::scalar(0.5, 1.0, 1).unwrap();
    let dt = 1.0 / 256.0;
    let (hist, _) = harvest_history(&drift, &model, &HarvestConfig::new(2000, dt, 0.25), 7).unwrap();
    let grid: Vec<Vec<f64>> = (-10..=10).map(|k| vec![0.2 * k as f64]).collect();
    let p = stationary_density_via_bridge(&drift, &model, &hist, &grid, 0.25, 1, 8, 3).unwrap();
    let peak = gaussian(0.0, 0.5);
    let worst = grid.iter().zip(&p.density).map(|(y, d)| (d - gaussian(y[0], 0.5)).abs()).fold(0.0, f64::max);
    println!("OU bridge density: sup error {:.4} of peak", worst / peak);
    assert!(worst <= 0.05 * peak);
}

#[test]
fn bridge_and_histogram_agree_on_double_well() {
    let drift = Drift::double_well(1);
    let model = NoiseModel::scalar(0.7, 2.0, 1).unwrap();
    let dt = 1.0 / 256.0;

    let mut cfg = DensityConfig::new(1000.0, dt, 1);
    cfg.burn_in = 20.0;
    cfg.thin = 4;
    cfg.bins = Some(vec![40]);
    cfg.bbox = Some(vec![(-4.0, 4.0)]);
    let hist = estimate_invariant_density(&drift, &model, &cfg, &(11..19).collect::<Vec<u64>>()).unwrap();
    let dens = hist.densities();
    let bulk: Vec<usize> = (0..dens.len()).filter(|&i| hist.center(i)[0].abs() <= 2.0).collect();
    let grid: Vec<Vec<f64>> = bulk.iter().map(|&i| hist.center(i)).collect();

    let (samples, _) = harvest_history(&drift, &model, &HarvestConfig::new(2000, dt, 0.25), 13).unwrap();
    let p = stationary_density_via_bridge(&drift, &model, &samples, &grid, 0.25, 1, 14, 3).unwrap();
    // The target is even (odd drift, scalar σ) and the grid is symmetric;
    // folding both estimates removes the slow left/right well imbalance.
    let m = bulk.len();
    let fold = |v: &dyn Fn(usize) -> f64| (0..m).map(|k| 0.5 * (v(k) + v(m - 1 - k))).collect::<Vec<f64>>();
    let h = fold(&|k| dens[bulk[k]]);
    let b = fold(&|k| p.density[k]);
    let peak = h.iter().copied().fold(0.0, f64::max);
    let worst = h.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    println!("double well: bridge vs histogram sup error {:.4} of peak (t0 = {})", worst / peak, p.t0);
    assert!(worst <= 0.10 * peak);
}

#[test]
fn double_well_tail_is_gaussian_or_lighter() {
    let drift = Drift::double_well(1);
    let model = NoiseModel::scalar(0.7, 2.0, 1).unwrap();
    let mut cfg = DensityConfig::new(2000.0, 1e-2, 1);
    cfg.burn_in = 20.0;
    let hist = estimate_invariant_density(&drift, &model, &cfg, &[21, 22]).unwrap();
    let fit = tail_fit(&hist).unwrap();
    println!("tail fit: slope {:.3}, r2 {:.4}", fit.slope, fit.r2);
    assert!(fit.slope < 0.0);
    assert!(fit.r2 > 0.95);
}

#[test]
fn double_well_density_is_sign_symmetric() {
    let drift = Drift::double_well(1);
    let model = NoiseModel::scalar(0.3, 1.0, 1).unwrap();
    let spec = RunSpec { t_total: 300.0, dt: 1e-2, burn_in: 20.0, x0: vec![0.5], thin: 1 };
    // per-seed share of time spent at y > 0 and in the right well
    let (mut right, mut well) = (Vec::new(), Vec::new());
    for s in 0..8 {
        let run = sim::run(&drift, &model, &spec, 100 + s, 0, None).unwrap();
        let n = run.states.len() as f64;
        right.push(run.states.iter().filter(|&&y| y > 0.0).count() as f64 / n);
        let r = run.states.iter().filter(|&&y| (0.5..1.5).contains(&y)).count() as f64;
        let l = run.states.iter().filter(|&&y| (-1.5..-0.5).contains(&y)).count() as f64;
        well.push((r - l) / n);
    }
    let (m, se) = mean_se(&right);
    let (w, wse) = mean_se(&well);
    println!("P(y > 0) = {m:.4} ± {se:.4}, right minus left well = {w:.4} ± {wse:.4}");
    assert!((m - 0.5).abs() <= 3.0 * se);
    assert!(w.abs() <= 3.0 * wse);
}

#[test]
fn lyapunov_exponent_is_invariant_under_rescaling() {
    let drift = Drift::double_well(1);
    let s = 3.0;
    let model = NoiseModel::scalar(0.7, s, 1).unwrap();
    let rdrift = drift.rescaled(s).unwrap();
    let rmodel = NoiseModel::scalar(0.7, 1.0, 1).unwrap();
    let mut cfg = LyapunovConfig::new(220.0, 1e-3, 1);
    cfg.burn_in = 20.0;
    let a = estimate_top_lyapunov(&drift, &model, &cfg, 31, None).unwrap();
    let b = estimate_top_lyapunov(&rdrift, &rmodel, &cfg, 32, None).unwrap();
    let combined = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
    println!("lambda1 {:.4} vs rescaled {:.4} (combined stderr {combined:.4})", a.lambda1_hat, b.lambda1_hat);
    assert!((a.lambda1_hat - b.lambda1_hat).abs() <= 3.0 * combined);
    for e in [&a, &b] {
        assert!(e.below_gronwall(&drift, 3.0 * e.stderr));
    }
}

#[test]
fn renormalized_log_growth_telescopes() {
    let drift = Drift::rotational();
    let model = NoiseModel::scalar(0.4, 1.0, 2).unwrap();
    let v0 = [0.6, 0.8];
    let spec = RunSpec { t_total: 5.0, dt: 1e-3, burn_in: 0.0, x0: vec![1.0, -0.5], thin: 1 };
    for seed in [1, 2, 3] {
        let run = sim::run(&drift, &model, &spec, seed, 0, Some(&v0)).unwrap();
        let noise = sample_fbm_replicate(&model, spec.t_total, spec.dt, seed, 0).unwrap();
        let traj = solve_flow(&drift, &model, &spec.x0, &noise, spec.dt).unwrap();
        let m = tangent_flow(&drift, &traj).unwrap();
        let direct = (m.matrices.last().unwrap() * DVector::from_column_slice(&v0)).norm().ln();
        let summed: f64 = run.log_growth.iter().sum();
        assert!((summed - direct).abs() <= 1e-8 * direct.abs().max(1.0), "{summed} vs {direct}");
    }
}

#[test]
fn ensemble_and_time_average_agree() {
    let drift = Drift::double_well(1);
    let model = NoiseModel::scalar(0.7, 1.0, 1).unwrap();
    let (t, dt, r) = (20.0, 1e-2, 1.0);
    let inside: Vec<f64> = (0..400)
        .map(|k| {
            let b = sample_fbm_replicate(&model, t, dt, 55, k).unwrap();
            let y = solve_flow(&drift, &model, &[0.0], &b, dt).unwrap();
            f64::from(u8::from(y.path.row(y.path.steps())[0].abs() <= r))
        })
        .collect();
    let (ens, ens_se) = mean_se(&inside);
    let mut cfg = DensityConfig::new(1000.0, dt, 1);
    cfg.burn_in = 20.0;
    let (avg, avg_se) = ball_mass_time_average(&drift, &model, &cfg, &[56, 57, 58, 59], r).unwrap();
    let combined = (ens_se * ens_se + avg_se * avg_se).sqrt();
    println!("ball mass: ensemble {ens:.4} ± {ens_se:.4}, time average {avg:.4} ± {avg_se:.4}");
    assert!((ens - avg).abs() <= 3.0 * combined);
}

#[test]
fn a_priori_envelope_has_no_violations() {
    let drift = Drift::double_well(1);
    let model = NoiseModel::scalar(0.7, 1.0, 1).unwrap();
    let xs: Vec<Vec<f64>> = (-3..=3).map(|x| vec![f64::from(x)]).collect();
    let runs = simulate_apriori_runs(&drift, &model, &xs, 1.0, 1e-3, 1000, 77).unwrap();
    let report = a_priori_bound_check(&drift, &model, &runs).unwrap();
    println!("a priori: L = {:.3}, violations {}, growth ratios {:?}", report.fitted_l, report.violations, report.growth_ratio);
    assert_eq!(report.violations, 0);
    // sup|Φ|/(1 + |x|^N) ≤ L(1 + Σ̂), and does not grow with |x|
    let g = &report.growth_ratio;
    assert!(g.iter().all(|&r| r <= report.fitted_l * (1.0 + report.envelope)));
    assert!(g[0].max(g[g.len() - 1]) <= g[g.len() / 2]);
}
