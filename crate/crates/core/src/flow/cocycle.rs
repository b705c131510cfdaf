use super::{solve_flow, Drift};
use crate::error::{grid_index, Result};
use crate::noise::{shift_theta, two_sided_fbm, NoiseModel, OperatorOptions};
use crate::path::PastPath;

/// |Φ^{t+s}_ω(x) − Φ^s_{θ_t ω}(Φ^t_ω(x))| for two-sided Wiener noise
/// ω = (ω⁻, ω⁺); both driving fBm paths are built from the noise operators.
#[allow(clippy::too_many_arguments)]
pub fn cocycle_residual(
    drift: &Drift,
    model: &NoiseModel,
    x: &[f64],
    omega_minus: &PastPath,
    omega_plus: &PastPath,
    t: f64,
    s: f64,
    opts: &OperatorOptions,
) -> Result<f64> {
    let dt = omega_plus.dt();
    let h = model.h();
    let qt = grid_index(t, dt)?;
    grid_index(s, dt)?;
    let total = t + s;
    if total == 0.0 {
        return Ok(0.0);
    }
    let b = two_sided_fbm(omega_minus, omega_plus, h, total, opts)?.value;
    let long = solve_flow(drift, model, x, &b, dt)?;
    let end = long.path.row(long.path.len() - 1).to_vec();
    if s == 0.0 {
        return Ok(0.0);
    }
    let mid = long.path.row(qt).to_vec();
    let (m2, p2) = shift_theta(t, (omega_minus, omega_plus))?;
    let b2 = two_sided_fbm(&m2, &p2, h, s, opts)?.value;
    let short = solve_flow(drift, model, &mid, &b2, dt)?;
    let end2 = short.path.row(short.path.len() - 1);
    Ok(end.iter().zip(end2).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
}
