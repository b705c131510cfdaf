//! Top Lyapunov exponent by tangent-norm growth, the λ⁺ functional and the
//! ball-mass bound built on it, σ sweeps and a local stability probe.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{grid_index, Error, Result};
use crate::flow::{Drift, Stepper};
use crate::measure::{mass_in_ball, DensityEstimate};
use crate::noise::{sample_fbm_replicate, NoiseModel, SigmaClass};
use crate::rng;
use crate::sim::{self, LongRun, RunSpec};
use crate::stats::batch_means;

/// Stream id used for random probe directions (kept apart from noise streams).
const PROBE_STREAM: u32 = 0xFFFF_0001;

/// Largest eigenvalue of the symmetric part of DF(y).
pub fn lambda_plus(drift: &Drift, y: &[f64]) -> f64 {
    let d = drift.dim();
    let mut j = vec![0.0; d * d];
    drift.jacobian_into(y, &mut j);
    let s = |a: usize, b: usize| 0.5 * (j[a * d + b] + j[b * d + a]);
    match d {
        1 => j[0],
        2 => {
            let (a, b, c) = (s(0, 0), s(0, 1), s(1, 1));
            0.5 * (a + c) + (0.25 * (a - c) * (a - c) + b * b).sqrt()
        }
        3 => sym3_max_eig([s(0, 0), s(1, 1), s(2, 2), s(0, 1), s(0, 2), s(1, 2)]),
        _ => {
            let m = DMatrix::from_fn(d, d, s);
            SymmetricEigen::new(m).eigenvalues.max()
        }
    }
}

// Trigonometric solution of the characteristic cubic for a symmetric 3×3
// matrix given as (a00, a11, a22, a01, a02, a12).
fn sym3_max_eig(m: [f64; 6]) -> f64 {
    let [a, b, c, d, e, f] = m;
    let p1 = d * d + e * e + f * f;
    if p1 == 0.0 {
        return a.max(b).max(c);
    }
    let q = (a + b + c) / 3.0;
    let p2 = (a - q).powi(2) + (b - q).powi(2) + (c - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let (ba, bb, bc) = ((a - q) / p, (b - q) / p, (c - q) / p);
    let (bd, be, bf) = (d / p, e / p, f / p);
    let det = ba * (bb * bc - bf * bf) - bd * (bd * bc - bf * be) + be * (bd * bf - bb * be);
    let r = (det / 2.0).clamp(-1.0, 1.0);
    q + 2.0 * p * (r.acos() / 3.0).cos()
}

#[derive(Clone, Debug)]
pub struct LyapunovConfig {
    pub t_total: f64,
    pub dt: f64,
    pub burn_in: f64,
    pub blocks: usize,
    /// Smallest admissible averaging window T − burn_in.
    pub min_averaging: f64,
    pub x0: Vec<f64>,
    /// Number of random orthonormal probe directions; 0 uses `v0` only.
    pub probes: usize,
}

impl LyapunovConfig {
    pub fn new(t_total: f64, dt: f64, dim: usize) -> Self {
        Self { t_total, dt, burn_in: 0.1 * t_total, blocks: 20, min_averaging: 100.0, x0: vec![0.0; dim], probes: 0 }
    }
    fn run_spec(&self, thin: usize) -> RunSpec {
        RunSpec { t_total: self.t_total, dt: self.dt, burn_in: self.burn_in, x0: self.x0.clone(), thin }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LyapunovEstimate {
    pub lambda1_hat: f64,
    /// Batch-means standard error.
    pub stderr: f64,
    pub t_total: f64,
    pub burn_in: f64,
    pub dt: f64,
    pub seed: u64,
    /// Steps between renormalisations of the tangent vector.
    pub renormalization_period: usize,
    pub blocks: usize,
    pub directions: usize,
}

impl LyapunovEstimate {
    /// λ̂₁ ≤ C3 + tol, the Grönwall ceiling of the one-sided Lipschitz condition.
    pub fn below_gronwall(&self, drift: &Drift, tol: f64) -> bool {
        self.lambda1_hat <= drift.constants.c3 + tol
    }
}

fn check_window(cfg: &LyapunovConfig) -> Result<()> {
    let avg = cfg.t_total - cfg.burn_in;
    if avg < cfg.min_averaging {
        return Err(Error::Insufficient(format!("averaging window {avg} shorter than {}", cfg.min_averaging)));
    }
    if cfg.blocks < 2 {
        return Err(Error::Insufficient("batch means need at least 2 blocks".into()));
    }
    Ok(())
}

fn growth_rate(run: &LongRun, dt: f64, blocks: usize) -> Result<(f64, f64)> {
    let n = run.log_growth.len();
    if n < blocks {
        return Err(Error::Insufficient(format!("{n} steps cannot fill {blocks} blocks")));
    }
    let lambda = run.log_growth.iter().sum::<f64>() / (n as f64 * dt);
    let (_, se) = batch_means(&run.log_growth, blocks);
    Ok((lambda, se / dt))
}

fn probe_directions(d: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng::stream2(seed, PROBE_STREAM, 0);
    let mut out: Vec<Vec<f64>> = Vec::new();
    while out.len() < count {
        let k = (count - out.len()).min(d);
        let g = DMatrix::from_fn(d, d, |_, _| rng::normal(&mut r));
        let q = g.qr().q();
        out.extend((0..k).map(|c| q.column(c).iter().copied().collect()));
    }
    out
}

/// λ̂₁ = (T − burn_in)⁻¹ Σ log|M_k v_k| with the tangent vector renormalised
/// every step. With `cfg.probes > 0` the estimate is the largest over a
/// random orthonormal probe set driven by the same noise.
pub fn estimate_top_lyapunov(drift: &Drift, model: &NoiseModel, cfg: &LyapunovConfig, seed: u64, v0: Option<&[f64]>) -> Result<LyapunovEstimate> {
    check_window(cfg)?;
    let d = drift.dim();
    let mut dirs = vec![v0.map(<[f64]>::to_vec).unwrap_or_else(|| {
        let mut e = vec![0.0; d];
        e[0] = 1.0;
        e
    })];
    if dirs[0].len() != d || !(dirs[0].iter().map(|v| v * v).sum::<f64>() > 0.0) {
        return Err(Error::InvalidArgument("v0 must be a non-zero vector of the state dimension".into()));
    }
    if cfg.probes > 0 {
        dirs = probe_directions(d, cfg.probes, seed);
    }
    let spec = cfg.run_spec(usize::MAX);
    let mut best: Option<(f64, f64)> = None;
    for v in &dirs {
        let run = sim::run(drift, model, &spec, seed, 0, Some(v))?;
        let est = growth_rate(&run, cfg.dt, cfg.blocks)?;
        if best.is_none_or(|b| est.0 > b.0) {
            best = Some(est);
        }
    }
    let (lambda1_hat, stderr) = best.expect("at least one direction");
    Ok(LyapunovEstimate {
        lambda1_hat,
        stderr,
        t_total: cfg.t_total,
        burn_in: cfg.burn_in,
        dt: cfg.dt,
        seed,
        renormalization_period: 1,
        blocks: cfg.blocks,
        directions: dirs.len(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub bound: f64,
    pub mass_in_ball: f64,
    pub sup_lambda_plus: f64,
    /// Monotonicity constant outside the ball; absent if the drift has none.
    pub c4: Option<f64>,
}

// Grid over the box (at most ~1e5 points) plus the origin.
fn sup_lambda_plus(drift: &Drift, density: &DensityEstimate) -> f64 {
    let d = density.dim();
    let per_axis = ((1e5f64).powf(1.0 / d as f64).floor() as usize).clamp(2, 513);
    let mut best = lambda_plus(drift, &vec![0.0; d]);
    let mut idx = vec![0usize; d];
    let mut y = vec![0.0; d];
    for _ in 0..per_axis.pow(d as u32) {
        for j in 0..d {
            y[j] = density.lo[j] + (density.hi[j] - density.lo[j]) * idx[j] as f64 / (per_axis - 1) as f64;
        }
        best = best.max(lambda_plus(drift, &y));
        for j in 0..d {
            idx[j] += 1;
            if idx[j] < per_axis {
                break;
            }
            idx[j] = 0;
        }
    }
    best
}

/// bound = −C4(R)·π̂(ℝᵈ∖B(0,R)) + sup λ⁺ · π̂(B(0,R)).
/// A radius past the histogram box simply gives π̂(B(0,R)) = 1.
pub fn lyapunov_bound(drift: &Drift, density: &DensityEstimate, r: f64) -> Result<BoundReport> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
    }
    let (m, _) = mass_in_ball(density, r);
    let sup = sup_lambda_plus(drift, density);
    let c4 = drift.c4_at(r);
    let outside = 1.0 - m;
    let bound = match c4 {
        Some(c) => -c * outside + sup * m,
        None if outside == 0.0 => sup,
        None => return Err(Error::Precondition(format!("drift '{}' has no monotonicity constant outside B(0,{r})", drift.name()))),
    };
    Ok(BoundReport { bound, mass_in_ball: m, sup_lambda_plus: sup, c4 })
}

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub lyapunov: LyapunovConfig,
    pub radius: f64,
    pub seeds: Vec<u64>,
    /// Keep every `thin`-th state for the histogram.
    pub thin: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub sigma_norm: f64,
    pub lambda1: f64,
    pub stderr: f64,
    pub mass_in_ball: f64,
    pub mass_stderr: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepTable {
    pub h: f64,
    pub radius: f64,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Ball mass at the first σ exceeds that at the last by more than
    /// k combined standard errors.
    pub fn mass_decreases(&self, k: f64) -> bool {
        let (a, b) = (&self.rows[0], &self.rows[self.rows.len() - 1]);
        a.mass_in_ball - b.mass_in_ball > k * (a.mass_stderr.powi(2) + b.mass_stderr.powi(2)).sqrt()
    }
    /// Adjacent rows whose mass increases by more than k combined errors.
    pub fn mass_violations(&self, k: f64) -> usize {
        self.rows
            .windows(2)
            .filter(|w| w[1].mass_in_ball - w[0].mass_in_ball > k * (w[0].mass_stderr.powi(2) + w[1].mass_stderr.powi(2)).sqrt())
            .count()
    }
    pub fn last_negative(&self, k: f64) -> bool {
        let r = &self.rows[self.rows.len() - 1];
        r.lambda1 + k * r.stderr < 0.0
    }
    pub fn bound_holds(&self, k: f64) -> bool {
        self.rows.iter().all(|r| r.lambda1 <= r.bound + k * r.stderr)
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "sigma_norm,lambda1,stderr,mass_in_ball,bound")?;
        for r in &self.rows {
            writeln!(w, "{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}", r.sigma_norm, r.lambda1, r.stderr, r.mass_in_ball, r.bound)?;
        }
        Ok(())
    }
}

/// One row per σ: pooled λ̂₁ over seeds, time-averaged π̂(B(0,R)) with
/// batch-means error, and the ball-mass bound from the pooled histogram.
pub fn sigma_sweep(drift: &Drift, h: f64, sigmas: &[DMatrix<f64>], class: Option<&SigmaClass>, cfg: &SweepConfig) -> Result<SweepTable> {
    check_window(&cfg.lyapunov)?;
    if cfg.seeds.is_empty() || sigmas.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one σ and one seed".into()));
    }
    let d = drift.dim();
    let mut v0 = vec![0.0; d];
    v0[0] = 1.0;
    let spec = cfg.lyapunov.run_spec(cfg.thin.max(1));
    let r = cfg.radius;
    let mut rows = Vec::with_capacity(sigmas.len());
    for sigma in sigmas {
        let model = match class {
            Some(c) => NoiseModel::with_class(h, sigma.clone(), c)?,
            None => NoiseModel::new(h, sigma.clone())?,
        };
        let n = cfg.seeds.len() as f64;
        let (mut lam, mut lam_var, mut mass, mut mass_var) = (0.0, 0.0, 0.0, 0.0);
        let mut states = Vec::new();
        for &seed in &cfg.seeds {
            let run = sim::run(drift, &model, &spec, seed, 0, Some(&v0))?;
            let (l, se) = growth_rate(&run, cfg.lyapunov.dt, cfg.lyapunov.blocks)?;
            lam += l / n;
            lam_var += se * se;
            let ind: Vec<f64> = run.states.chunks_exact(d).map(|y| f64::from(y.iter().map(|v| v * v).sum::<f64>() <= r * r)).collect();
            let (m, mse) = batch_means(&ind, cfg.lyapunov.blocks);
            mass += m / n;
            mass_var += mse * mse;
            states.extend_from_slice(&run.states);
        }
        let density = DensityEstimate::from_samples(&states, d, None, None)?;
        let bound = lyapunov_bound(drift, &density, r)?;
        rows.push(SweepRow {
            sigma_norm: model.sigma_norm(),
            lambda1: lam,
            stderr: lam_var.sqrt() / n,
            mass_in_ball: mass,
            mass_stderr: mass_var.sqrt() / n,
            bound: bound.bound,
        });
    }
    Ok(SweepTable { h, radius: r, rows })
}

// (∫₀¹ DF(y + s·scale·u) ds) u by 3-point Gauss–Legendre, exact for cubic F.
fn secant(drift: &Drift, y: &[f64], u: &[f64], scale: f64) -> Vec<f64> {
    const NODES: [(f64, f64); 3] = [(0.112_701_665_379_258_31, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.887_298_334_620_741_7, 5.0 / 18.0)];
    let d = y.len();
    let mut jac = vec![0.0; d * d];
    let mut out = vec![0.0; d];
    let mut p = vec![0.0; d];
    for (s, w) in NODES {
        for i in 0..d {
            p[i] = y[i] + s * scale * u[i];
        }
        drift.jacobian_into(&p, &mut jac);
        for i in 0..d {
            out[i] += w * (0..d).map(|j| jac[i * d + j] * u[j]).sum::<f64>();
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityReport {
    pub nu: f64,
    pub radius: f64,
    pub probes: usize,
    pub initial_separation: f64,
    /// sup_t e^{νt}|Φ^t(x+y) − Φ^t(x)|, maximised over probe directions.
    pub max_weighted_separation: f64,
    /// The weighted separation exceeded 10× its initial value.
    pub flagged: bool,
}

/// Follows Φ^t(x + y) and Φ^t(x) on the same noise for perturbations y of
/// length `radius` and reports the largest e^{νt}-weighted separation.
/// The separation is carried as log-length and direction, with drift
/// differences taken through the secant ∫₀¹ DF(ξ + sδ) ds δ.
/// Refuses unless the prior estimate satisfies λ̂₁ + stderr < −ν.
#[allow(clippy::too_many_arguments)]
pub fn local_stability_probe(
    drift: &Drift,
    model: &NoiseModel,
    prior: &LyapunovEstimate,
    x: &[f64],
    radius: f64,
    nu: f64,
    t_total: f64,
    dt: f64,
    seed: u64,
    probes: usize,
) -> Result<StabilityReport> {
    if !(nu > 0.0) || !(prior.lambda1_hat + prior.stderr < -nu) {
        return Err(Error::Precondition(format!(
            "need 0 < ν < −λ̂₁ − stderr (ν = {nu}, λ̂₁ = {}, stderr = {})",
            prior.lambda1_hat, prior.stderr
        )));
    }
    let d = drift.dim();
    if x.len() != d {
        return Err(Error::InvalidArgument("x has the wrong dimension".into()));
    }
    let n = grid_index(t_total, dt)?;
    let noise = sample_fbm_replicate(model, t_total, dt, seed, 0)?;
    let dirs: Vec<Vec<f64>> = if d == 1 {
        [1.0, -1.0].iter().cycle().take(probes.max(1)).map(|&s| vec![s]).collect()
    } else {
        let mut r = rng::stream2(seed, PROBE_STREAM, 1);
        (0..probes.max(1))
            .map(|_| {
                let g = DVector::from_fn(d, |_, _| rng::normal(&mut r));
                (g.normalize()).iter().copied().collect()
            })
            .collect()
    };
    let limit = (10.0 * radius).ln();
    let mut worst = f64::NEG_INFINITY;
    let mut flagged = false;
    let mut base = Vec::with_capacity(n);
    {
        let mut st = Stepper::new(drift, model, x, noise.row(0));
        for k in 1..=n {
            let prev = st.state().to_vec();
            st.step(noise.row(k), dt, k as f64 * dt)?;
            base.push((prev, st.predictor().to_vec()));
        }
    }
    for u0 in &dirs {
        // separation δ = e^L·u, advanced by the Heun scheme in difference form
        // so that it never hits the round-off floor of |Φ(x+y)| − |Φ(x)|
        let mut u = u0.clone();
        let mut log_norm = radius.ln();
        let mut sup = log_norm;
        for (k, (y, yp)) in base.iter().enumerate() {
            let scale = log_norm.exp();
            let m1 = secant(drift, y, &u, scale);
            let v: Vec<f64> = (0..d).map(|i| u[i] + dt * m1[i]).collect();
            let m2 = secant(drift, yp, &v, scale);
            let next: Vec<f64> = (0..d).map(|i| u[i] + 0.5 * dt * (m1[i] + m2[i])).collect();
            let len = next.iter().map(|c| c * c).sum::<f64>().sqrt();
            if !(len > 0.0 && len.is_finite()) {
                return Err(Error::NonFinite("separation in stability probe".into()));
            }
            log_norm += len.ln();
            u = next.iter().map(|c| c / len).collect();
            sup = sup.max(nu * (k + 1) as f64 * dt + log_norm);
        }
        flagged |= sup > limit;
        worst = worst.max(sup);
    }
    let worst = worst.exp();
    Ok(StabilityReport { nu, radius, probes: dirs.len(), initial_separation: radius, max_weighted_separation: worst, flagged })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_plus_examples() {
        let lin = Drift::linear(DMatrix::from_diagonal_element(2, 2, -0.7)).unwrap();
        assert!((lambda_plus(&lin, &[3.0, -1.0]) + 0.7).abs() < 1e-15);
        assert_eq!(lambda_plus(&Drift::double_well(1), &[0.0]), 1.0);
        let rot = Drift::linear(Drift::rotational_matrix()).unwrap();
        assert!(lambda_plus(&rot, &[0.2, 0.4]).abs() < 1e-15);
    }

    #[test]
    fn closed_form_3x3_matches_iterative() {
        let mut r = rng::stream(9, 0);
        for _ in 0..50 {
            let a = DMatrix::from_fn(3, 3, |_, _| rng::normal(&mut r));
            let s = (&a + a.transpose()) * 0.5;
            let want = SymmetricEigen::new(s.clone()).eigenvalues.max();
            let got = sym3_max_eig([s[(0, 0)], s[(1, 1)], s[(2, 2)], s[(0, 1)], s[(0, 2)], s[(1, 2)]]);
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn linear_contraction_rate() {
        for a in [0.5, 2.0] {
            let drift = Drift::linear(DMatrix::from_element(1, 1, -a)).unwrap();
            let model = NoiseModel::scalar(0.7, 1.0, 1).unwrap();
            let cfg = LyapunovConfig::new(120.0, 0.01, 1);
            let est = estimate_top_lyapunov(&drift, &model, &cfg, 3, None).unwrap();
            assert!((est.lambda1_hat + a).abs() < 1e-3, "{}", est.lambda1_hat);
            assert!(est.below_gronwall(&drift, 1e-9));
        }
    }

    #[test]
    fn short_window_is_refused() {
        let drift = Drift::double_well(1);
        let model = NoiseModel::scalar(0.7, 1.0, 1).unwrap();
        let cfg = LyapunovConfig::new(50.0, 0.01, 1);
        assert!(matches!(estimate_top_lyapunov(&drift, &model, &cfg, 1, None), Err(Error::Insufficient(_))));
    }

    #[test]
    fn bound_trivial_cases() {
        let drift = Drift::double_well(1);
        let far: Vec<f64> = (0..1000).map(|i| 5.0 + i as f64 * 1e-3).collect();
        let d = DensityEstimate::from_samples(&far, 1, None, None).unwrap();
        let b = lyapunov_bound(&drift, &d, 2.0).unwrap();
        assert!((b.bound + 3.0).abs() < 1e-12);
        let near: Vec<f64> = (0..1000).map(|i| -0.5 + i as f64 * 1e-3).collect();
        let d = DensityEstimate::from_samples(&near, 1, None, None).unwrap();
        let b = lyapunov_bound(&drift, &d, 2.0).unwrap();
        assert_eq!(b.bound, 1.0);
    }

    #[test]
    fn probe_refuses_without_negative_exponent() {
        let drift = Drift::double_well(1);
        let model = NoiseModel::scalar(0.7, 1.0, 1).unwrap();
        let prior = LyapunovEstimate {
            lambda1_hat: 0.2,
            stderr: 0.01,
            t_total: 1.0,
            burn_in: 0.0,
            dt: 0.01,
            seed: 0,
            renormalization_period: 1,
            blocks: 20,
            directions: 1,
        };
        let r = local_stability_probe(&drift, &model, &prior, &[0.5], 1e-2, 0.1, 5.0, 0.01, 1, 2);
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn probe_on_linear_contraction_never_grows() {
        let a = 1.5;
        let drift = Drift::linear(DMatrix::from_element(1, 1, -a)).unwrap();
        let model = NoiseModel::scalar(0.3, 2.0, 1).unwrap();
        let prior = LyapunovEstimate {
            lambda1_hat: -a,
            stderr: 0.0,
            t_total: 1.0,
            burn_in: 0.0,
            dt: 0.01,
            seed: 0,
            renormalization_period: 1,
            blocks: 20,
            directions: 1,
        };
        let r = local_stability_probe(&drift, &model, &prior, &[0.5], 1e-2, 0.7, 10.0, 0.01, 4, 2).unwrap();
        assert!((r.max_weighted_separation - 1e-2).abs() < 1e-15);
        assert!(!r.flagged);
    }
}
