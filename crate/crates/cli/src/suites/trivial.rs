use fracrds::bridge::{girsanov_factor, BridgeSampler, BridgeSpec};
use fracrds::flow::{solve_flow, Drift};
use fracrds::fraccalc::{frac_derivative_regularized, frac_integral, holder_norm, FracOrder};
use fracrds::noise::{bnorm, concat_p, history_operator, liouville_fbm, mvn_operator, shift_theta, shift_vartheta, NoiseModel, OperatorOptions};
use fracrds::{rng, Path, PastPath, Result};

use super::noise::brownian_past;
use super::{max_abs, max_diff, Check};

pub(super) fn exact_cases(seed: u64) -> Result<Vec<Check>> {
    let dt = 0.01;
    let opts = OperatorOptions { tolerance: f64::INFINITY, window: None };
    let mut r = rng::stream2(seed, 0x7B, 0);
    let wm = brownian_past(&mut r, dt, 2, 300);
    let wp = brownian_past(&mut r, dt, 2, 150);
    let zero = PastPath::zeros(dt, 2, 300);
    let mut c = Vec::new();

    c.push(Check::exact("P_0(w-, w+) = w-", max_diff(concat_p(0.0, &wm, &wp)?.data(), wm.data()), 0.0));
    c.push(Check::exact("vartheta_0 = id", max_diff(shift_vartheta(0.0, &wm)?.data(), wm.data()), 0.0));
    let (a, b) = shift_theta(0.0, (&wm, &wp))?;
    c.push(Check::exact("theta_0 = id", max_diff(a.data(), wm.data()).max(max_diff(b.data(), wp.data())), 0.0));
    // integer multiples of 1.5 keep every difference exact
    let lin = PastPath::new(dt, 1, (0..=200).map(|k| 1.5 * k as f64).collect())?;
    c.push(Check::exact("vartheta_t of a linear path", max_diff(shift_vartheta(0.5, &lin)?.data(), lin.truncate(150).data()), 0.0));
    for h in [0.3, 0.7] {
        c.push(Check::exact(format!("H={h} D_H 0 = 0"), max_abs(mvn_operator(&zero, h, &opts)?.value.data()), 0.0));
        c.push(Check::exact(format!("H={h} history of 0 = 0"), max_abs(history_operator(&zero, h, 1.0, dt, &opts)?.value.data()), 0.0));
    }
    c.push(Check::exact("H=0.5 D_H = id", max_diff(mvn_operator(&wm, 0.5, &opts)?.value.data(), wm.data()), 0.0));
    c.push(Check::exact("H=0.5 history = 0", max_abs(history_operator(&wm, 0.5, 1.0, dt, &opts)?.value.data()), 0.0));
    let lf = liouville_fbm(&wp, 0.5, 1.0)?;
    c.push(Check::exact("H=0.5 Liouville fBm = w+(-t)", max_diff(lf.data(), wp.truncate(100).data()), 0.0));
    c.push(Check::exact("norm of 0", bnorm(&zero, 0.3), 0.0));
    c.push(Check::exact("norm is positively homogeneous", bnorm(&wm.scaled(2.0), 0.3) - 2.0 * bnorm(&wm, 0.3), 0.0));

    let n = 256;
    let alpha = FracOrder::new(0.4)?;
    c.push(Check::exact("J of 0 = 0", max_abs(frac_integral(alpha, &Path::zeros(1.0 / n as f64, 1, n)).data()), 0.0));
    let k = frac_derivative_regularized(alpha, &Path::from_fn(1.0 / n as f64, 1, n, |_| vec![2.5]));
    c.push(Check::exact("derivative of a constant: regular part", max_abs(k.regular.data()), 0.0));
    c.push(Check::exact("Hoelder norm of a constant", holder_norm(&Path::from_fn(0.01, 1, 100, |_| vec![3.0]), 0.5), 0.0));

    let model = NoiseModel::scalar(0.3, 1.0, 2)?;
    let noise = Path::from_fn(dt, 2, 100, |t| vec![t.sin(), t * t]);
    let traj = solve_flow(&Drift::zero(2), &model, &[0.3, -0.1], &noise, dt)?;
    let shifted: Vec<f64> = noise.data().chunks(2).flat_map(|v| [0.3 + v[0], -0.1 + v[1]]).collect();
    c.push(Check::at_most("zero drift solution is the shifted noise", max_diff(traj.path.data(), &shifted), 4.0 * f64::EPSILON));
    let sampler = BridgeSampler::new(BridgeSpec::new(vec![0.0], 0.25, 0.7, 0.25 / 32.0)?);
    let l = Path::from_fn(0.25 / 32.0, 1, 32, |_| vec![0.1]);
    let g = girsanov_factor(&Drift::zero(1), &NoiseModel::scalar(0.7, 1.0, 1)?, &l, &[0.6], &sampler, 10, seed)?;
    c.push(Check::exact("zero drift Girsanov factor", g.g, 1.0));
    Ok(c)
}
