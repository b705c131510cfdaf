use nalgebra::DMatrix;

use super::{Drift, Trajectory};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct TangentTrajectory {
    /// D_xΦ^t at every grid node.
    pub matrices: Vec<DMatrix<f64>>,
    /// log of the spectral norm of each matrix.
    pub log_norm_running: Vec<f64>,
}

/// One Heun step of d/dt M = J(t)·M with J frozen at the step's endpoints.
pub(crate) fn heun_tangent_step(j0: &DMatrix<f64>, j1: &DMatrix<f64>, m: &DMatrix<f64>, dt: f64) -> DMatrix<f64> {
    let k1 = j0 * m;
    let pred = m + &k1 * dt;
    let k2 = j1 * pred;
    m + (k1 + k2) * (0.5 * dt)
}

/// Variational flow d/dt DΦ = DF(Φ)·DΦ, DΦ⁰ = I, along a computed trajectory.
pub fn tangent_flow(drift: &Drift, traj: &Trajectory) -> Result<TangentTrajectory> {
    let d = drift.dim();
    let dt = traj.path.dt();
    let n = traj.path.len();
    let mut matrices = Vec::with_capacity(n);
    let mut logs = Vec::with_capacity(n);
    let mut m = DMatrix::identity(d, d);
    let mut j0 = drift.jacobian(traj.path.row(0));
    matrices.push(m.clone());
    logs.push(0.0);
    for k in 1..n {
        let j1 = drift.jacobian(traj.path.row(k));
        m = heun_tangent_step(&j0, &j1, &m, dt);
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("tangent flow at t = {}", k as f64 * dt)));
        }
        logs.push(m.singular_values().max().ln());
        matrices.push(m.clone());
        j0 = j1;
    }
    Ok(TangentTrajectory { matrices, log_norm_running: logs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::solve_flow;
    use crate::noise::NoiseModel;
    use crate::path::Path;

    #[test]
    fn linear_tangent_is_matrix_exponential() {
        let m = NoiseModel::scalar(0.3, 1.0, 2).unwrap();
        let f = Drift::linear(-DMatrix::identity(2, 2)).unwrap();
        let noise = Path::from_fn(1e-3, 2, 1000, |t| vec![t.sin(), t * t]);
        let tr = solve_flow(&f, &m, &[0.3, 0.1], &noise, 1e-3).unwrap();
        let tg = tangent_flow(&f, &tr).unwrap();
        assert!((tg.log_norm_running[1000].exp() - (-1.0f64).exp()).abs() <= 1e-6);
        assert_eq!(tg.matrices[0], DMatrix::identity(2, 2));
    }

    #[test]
    fn pinned_double_well_contracts_at_rate_two() {
        let m = NoiseModel::scalar(0.7, 1.0, 1).unwrap();
        let f = Drift::double_well(1);
        let tr = solve_flow(&f, &m, &[1.0], &Path::zeros(1e-3, 1, 2000), 1e-3).unwrap();
        let tg = tangent_flow(&f, &tr).unwrap();
        let got = tg.matrices[2000][(0, 0)];
        assert!((got / (-4.0f64).exp() - 1.0).abs() < 1e-5, "{got}");
    }
}
