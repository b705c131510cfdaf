//! Long single-trajectory runs shared by the Lyapunov and density estimators.
//!
//! The whole driving fBm path is sampled exactly in one piece (circulant
//! embedding for long grids), then the state and optionally one tangent
//! vector are advanced step by step without storing the trajectory.

use nalgebra::{DMatrix, DVector};

use crate::error::{grid_index, Error, Result};
use crate::flow::{Drift, Stepper};
use crate::noise::{sample_fbm_replicate, NoiseModel};

#[derive(Clone, Debug)]
pub struct RunSpec {
    pub t_total: f64,
    pub dt: f64,
    pub burn_in: f64,
    pub x0: Vec<f64>,
    /// Keep every `thin`-th post-burn-in state.
    pub thin: usize,
}

#[derive(Clone, Debug, Default)]
pub struct LongRun {
    /// Post-burn-in states, row-major with `dim` entries per sample.
    pub states: Vec<f64>,
    pub dim: usize,
    /// Post-burn-in log growth of the renormalised tangent vector, per step.
    pub log_growth: Vec<f64>,
    /// Number of steps discarded as burn-in.
    pub burn_steps: usize,
}

pub fn run(drift: &Drift, model: &NoiseModel, spec: &RunSpec, seed: u64, replicate: u32, tangent: Option<&[f64]>) -> Result<LongRun> {
    let d = drift.dim();
    let n = grid_index(spec.t_total, spec.dt)?;
    let burn = grid_index(spec.burn_in, spec.dt)?;
    if burn >= n {
        return Err(Error::InvalidArgument(format!("burn-in {} is not shorter than T = {}", spec.burn_in, spec.t_total)));
    }
    let noise = sample_fbm_replicate(model, spec.t_total, spec.dt, seed, replicate)?;
    let mut st = Stepper::new(drift, model, &spec.x0, noise.row(0));
    let thin = spec.thin.max(1);
    let mut out = LongRun { dim: d, burn_steps: burn, ..Default::default() };
    out.states.reserve((n - burn) / thin * d + d);
    let mut v = tangent.map(|v0| {
        let v = DVector::from_column_slice(v0);
        let nv = v.norm();
        v / nv
    });
    let mut j0 = DMatrix::zeros(d, d);
    let mut jbuf = vec![0.0; d * d];
    if v.is_some() {
        drift.jacobian_into(st.state(), &mut jbuf);
        j0.copy_from_slice(&row_to_col(&jbuf, d));
        out.log_growth.reserve(n - burn);
    }
    for k in 1..=n {
        let t = k as f64 * spec.dt;
        let y = st.step(noise.row(k), spec.dt, t)?;
        if let Some(vc) = v.as_mut() {
            drift.jacobian_into(y, &mut jbuf);
            let j1 = DMatrix::from_column_slice(d, d, &row_to_col(&jbuf, d));
            let k1 = &j0 * &*vc;
            let pred = &*vc + &k1 * spec.dt;
            let k2 = &j1 * pred;
            let next = &*vc + (k1 + k2) * (0.5 * spec.dt);
            let r = next.norm();
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::NonFinite(format!("tangent vector at t = {t}")));
            }
            if k > burn {
                out.log_growth.push(r.ln());
            }
            *vc = next / r;
            j0 = j1;
        }
        if k > burn && (k - burn) % thin == 0 {
            out.states.extend_from_slice(y);
        }
    }
    Ok(out)
}

fn row_to_col(m: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            out[j * d + i] = m[i * d + j];
        }
    }
    out
}
