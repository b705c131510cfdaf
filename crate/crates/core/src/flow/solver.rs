use serde::Serialize;

use super::Drift;
use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::path::Path;

/// Solutions leaving this ball abort the run.
pub const BLOWUP_LIMIT: f64 = 1e8;

#[derive(Clone, Debug, Default, Serialize)]
pub struct SolverStats {
    pub steps: usize,
    pub max_abs_f: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub path: Path,
    pub driving_noise: Path,
    pub x0: Vec<f64>,
    pub stats: SolverStats,
}

/// One Heun step at a time on Z, for callers that stream long runs.
pub struct Stepper<'a> {
    drift: &'a Drift,
    sigma: Vec<f64>,
    x: Vec<f64>,
    z: Vec<f64>,
    y: Vec<f64>,
    f1: Vec<f64>,
    f2: Vec<f64>,
    yp: Vec<f64>,
    s_next: Vec<f64>,
    pub stats: SolverStats,
}

impl<'a> Stepper<'a> {
    /// `omega0` is the noise value at the start (zero for fBm paths).
    pub fn new(drift: &'a Drift, model: &NoiseModel, x0: &[f64], omega0: &[f64]) -> Self {
        let d = drift.dim();
        let sigma: Vec<f64> = (0..d * d).map(|k| model.sigma()[(k / d, k % d)]).collect();
        let mut s = Self {
            drift,
            sigma,
            x: x0.to_vec(),
            z: vec![0.0; d],
            y: vec![0.0; d],
            f1: vec![0.0; d],
            f2: vec![0.0; d],
            yp: vec![0.0; d],
            s_next: vec![0.0; d],
            stats: SolverStats::default(),
        };
        s.apply_sigma(omega0);
        for i in 0..d {
            s.y[i] = s.x[i] + s.s_next[i];
        }
        s
    }

    fn apply_sigma(&mut self, w: &[f64]) {
        let d = self.x.len();
        for i in 0..d {
            self.s_next[i] = (0..d).map(|j| self.sigma[i * d + j] * w[j]).sum();
        }
    }

    /// Current state Y.
    pub fn state(&self) -> &[f64] {
        &self.y
    }

    /// Predictor stage of the most recent step.
    pub fn predictor(&self) -> &[f64] {
        &self.yp
    }

    /// Advances one step of size `dt` to the noise value `omega_next` and
    /// returns the new state. `t` is only used for error reporting.
    pub fn step(&mut self, omega_next: &[f64], dt: f64, t: f64) -> Result<&[f64]> {
        let d = self.x.len();
        self.drift.eval(&self.y, &mut self.f1);
        self.apply_sigma(omega_next);
        for i in 0..d {
            self.yp[i] = self.z[i] + dt * self.f1[i] + self.x[i] + self.s_next[i];
        }
        self.drift.eval(&self.yp, &mut self.f2);
        let mut norm2 = 0.0;
        let mut fmax: f64 = 0.0;
        for i in 0..d {
            self.z[i] += 0.5 * dt * (self.f1[i] + self.f2[i]);
            self.y[i] = self.z[i] + self.x[i] + self.s_next[i];
            norm2 += self.y[i] * self.y[i];
            fmax = fmax.max(self.f1[i].abs()).max(self.f2[i].abs());
        }
        self.stats.steps += 1;
        self.stats.max_abs_f = self.stats.max_abs_f.max(fmax);
        if !(norm2.sqrt() <= BLOWUP_LIMIT) {
            return Err(Error::BlowUp { t });
        }
        Ok(&self.y)
    }
}

fn check_grid(noise: &Path, dt: f64, dim: usize) -> Result<()> {
    if (noise.dt() - dt).abs() > 1e-12 * dt {
        return Err(Error::GridMismatch(format!("noise grid step {} differs from dt = {dt}", noise.dt())));
    }
    if noise.dim() != dim {
        return Err(Error::GridMismatch(format!("noise dimension {} differs from state dimension {dim}", noise.dim())));
    }
    Ok(())
}

/// Φ^t(x) on the grid of `noise`, by Heun steps on Z with linear
/// interpolation of the noise inside each step.
pub fn solve_flow(drift: &Drift, model: &NoiseModel, x0: &[f64], noise: &Path, dt: f64) -> Result<Trajectory> {
    let d = drift.dim();
    if model.dim() != d || x0.len() != d {
        return Err(Error::InvalidArgument(format!("dimension mismatch: drift {d}, sigma {}, x0 {}", model.dim(), x0.len())));
    }
    check_grid(noise, dt, d)?;
    let mut st = Stepper::new(drift, model, x0, noise.row(0));
    let mut out = Path::zeros(dt, d, noise.steps());
    out.row_mut(0).copy_from_slice(st.state());
    for k in 1..noise.len() {
        let y = st.step(noise.row(k), dt, k as f64 * dt)?;
        out.row_mut(k).copy_from_slice(y);
    }
    Ok(Trajectory { path: out, driving_noise: noise.clone(), x0: x0.to_vec(), stats: st.stats })
}

/// Sup over grid times of |Y_t − x − ∫_0^t F(Y_s) ds − σω(t)| with the
/// integral taken by the trapezoid rule along the computed solution.
pub fn integral_form_residual(drift: &Drift, model: &NoiseModel, traj: &Trajectory) -> f64 {
    let d = drift.dim();
    let dt = traj.path.dt();
    let sigma = model.sigma();
    let mut integral = vec![0.0; d];
    let mut f_prev = drift.eval_vec(traj.path.row(0));
    let mut worst: f64 = 0.0;
    for k in 1..traj.path.len() {
        let f = drift.eval_vec(traj.path.row(k));
        let w = traj.driving_noise.row(k);
        let w0 = traj.driving_noise.row(0);
        for i in 0..d {
            integral[i] += 0.5 * dt * (f_prev[i] + f[i]);
            let sw: f64 = (0..d).map(|j| sigma[(i, j)] * (w[j] - w0[j])).sum();
            let r = traj.path.row(k)[i] - traj.x0[i] - integral[i] - sw;
            worst = worst.max(r.abs());
        }
        f_prev = f;
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn zero_drift_is_translation_of_noise() {
        let m = NoiseModel::new(0.3, DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.0, 1.0])).unwrap();
        let noise = Path::from_fn(0.01, 2, 100, |t| vec![t.sin(), (3.0 * t).cos() - 1.0]);
        let tr = solve_flow(&Drift::zero(2), &m, &[1.0, -1.0], &noise, 0.01).unwrap();
        for k in 0..=100 {
            let w = noise.row(k);
            let want = [1.0 + (2.0 * w[0] + 0.5 * w[1]), -1.0 + w[1]];
            assert_eq!(tr.path.row(k), &want);
        }
    }

    #[test]
    fn linear_decay_matches_exponential() {
        let m = NoiseModel::scalar(0.7, 1.0, 1).unwrap();
        let f = Drift::linear(DMatrix::from_element(1, 1, -1.0)).unwrap();
        let noise = Path::zeros(1e-3, 1, 1000);
        let tr = solve_flow(&f, &m, &[2.0], &noise, 1e-3).unwrap();
        let exact = 2.0 * (-1.0f64).exp();
        assert!((tr.path.row(1000)[0] / exact - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn blow_up_is_reported() {
        // cubic growth from a large start with a step too big for stability
        let m = NoiseModel::scalar(0.5, 1.0, 1).unwrap();
        let f = Drift::double_well(1);
        let noise = Path::zeros(0.5, 1, 50);
        let e = solve_flow(&f, &m, &[10.0], &noise, 0.5).unwrap_err();
        assert!(matches!(e, Error::BlowUp { .. }));
    }

    #[test]
    fn grid_mismatch_rejected() {
        let m = NoiseModel::scalar(0.5, 1.0, 1).unwrap();
        let noise = Path::zeros(0.1, 1, 10);
        assert!(matches!(solve_flow(&Drift::zero(1), &m, &[0.0], &noise, 0.05), Err(Error::GridMismatch(_))));
    }
}
