use crate::error::{grid_index, Error, Result};
use crate::kernel::cell_integral;
use crate::noise::alpha_h;
use crate::path::Path;
use crate::rng::{self, Rng};

/// Stream tag for bridge replicates; fBm streams use small component indices.
pub const BRIDGE_TAG: u32 = 0xB000_0000;

/// Conditioning data of the Wiener–Liouville bridge.
#[derive(Clone, Debug)]
pub struct BridgeSpec {
    /// Conditioned endpoint of the Liouville fBm.
    pub z: Vec<f64>,
    pub t0: f64,
    pub h: f64,
    pub dt: f64,
    pub rho: f64,
}

impl BridgeSpec {
    pub fn new(z: Vec<f64>, t0: f64, h: f64, dt: f64) -> Result<Self> {
        if !(t0 > 0.0 && t0 <= 1.0) {
            return Err(Error::InvalidArgument(format!("t0 = {t0} outside (0, 1]")));
        }
        if !(h > 0.0 && h < 1.0) {
            return Err(Error::InvalidArgument(format!("Hurst parameter {h} outside (0,1)")));
        }
        let n = grid_index(t0, dt)?;
        if n < 2 {
            return Err(Error::InvalidArgument("bridge needs at least two cells".into()));
        }
        Ok(Self { z, t0, h, dt, rho: 1.0 / alpha_h(h) })
    }
    pub fn steps(&self) -> usize {
        (self.t0 / self.dt).round() as usize
    }
    pub fn dim(&self) -> usize {
        self.z.len()
    }
    /// Variance t0^{2H}ρ²/(2H) of each component of the Liouville fBm at t0.
    pub fn endpoint_variance(&self) -> f64 {
        self.rho * self.rho * self.t0.powf(2.0 * self.h) / (2.0 * self.h)
    }
    /// E[X_s] per unit z at the grid nodes.
    pub fn mean_profile(&self) -> Vec<f64> {
        let p = self.h + 0.5;
        let c = 2.0 * self.h / (self.t0.powf(2.0 * self.h) * self.rho * p);
        (0..=self.steps()).map(|k| c * (self.t0.powf(p) - (self.t0 - k as f64 * self.dt).max(0.0).powf(p))).collect()
    }
}

/// One bridge sample: X on [0, t0], its Brownian part W, and the drift K
/// averaged over each cell (row-major, `dim` per cell).
#[derive(Clone, Debug)]
pub struct BridgePath {
    pub x: Path,
    pub w: Path,
    pub k: Vec<f64>,
}

// ∫_x^{x+h} u^e du, including e = −1.
fn power_cell(x: f64, h: f64, e: f64) -> f64 {
    if (e + 1.0).abs() < 1e-12 {
        (h / x).ln_1p()
    } else {
        cell_integral(x, h, e + 1.0)
    }
}

/// Cell constants shared by every replicate of one (t0, H, dt).
///
/// The bridge solves dX = K ds + dW with
/// K_s = (2H/ρ)(t0−s)^{H−1/2}(z/t0^{2H} − ρ∫₀ˢ(t0−u)^{−H−1/2}dW_u).
/// Per cell the pair (ΔW, ∫(t0−u)^{−H−1/2}dW) is drawn exactly, and the
/// outer factor (t0−s)^{H−1/2} is integrated exactly over the cell.
#[derive(Clone, Debug)]
pub struct BridgeSampler {
    spec: BridgeSpec,
    outer: Vec<f64>,
    cross: Vec<f64>,
    resid_sd: Vec<f64>,
}

impl BridgeSampler {
    pub fn new(spec: BridgeSpec) -> Self {
        let n = spec.steps();
        let (h, dt, t0) = (spec.h, spec.dt, spec.t0);
        let mut outer = Vec::with_capacity(n);
        let mut cross = Vec::with_capacity(n);
        let mut resid_sd = Vec::with_capacity(n);
        for k in 0..n {
            // distance from the cell's right end to t0
            let x = t0 - (k + 1) as f64 * dt;
            let x = if k + 1 == n { 0.0 } else { x.max(0.0) };
            outer.push(power_cell(x, dt, h - 0.5));
            if k + 1 < n {
                let c = power_cell(x, dt, -h - 0.5);
                let v = power_cell(x, dt, -2.0 * h - 1.0);
                cross.push(c);
                resid_sd.push((v - c * c / dt).max(0.0).sqrt());
            }
        }
        Self { spec, outer, cross, resid_sd }
    }

    pub fn spec(&self) -> &BridgeSpec {
        &self.spec
    }

    /// ∫ over cell k of (t0−s)^{H−1/2} ds.
    pub fn outer(&self) -> &[f64] {
        &self.outer
    }

    /// Bridge to endpoint `z` from the given stream.
    pub fn sample_with(&self, z: &[f64], rng: &mut Rng) -> Result<BridgePath> {
        let s = &self.spec;
        let d = z.len();
        let n = s.steps();
        let (h, dt, rho) = (s.h, s.dt, s.rho);
        let target: Vec<f64> = z.iter().map(|v| v / s.t0.powf(2.0 * h)).collect();
        let gain = 2.0 * h / rho;
        let sq = dt.sqrt();
        let mut x = vec![0.0; d * (n + 1)];
        let mut w = vec![0.0; d * (n + 1)];
        let mut kk = vec![0.0; d * n];
        let mut inner = vec![0.0; d];
        for k in 0..n {
            for j in 0..d {
                let dw = sq * rng::normal(rng);
                let drift = gain * self.outer[k] * (target[j] - rho * inner[j]);
                kk[k * d + j] = drift / dt;
                x[(k + 1) * d + j] = x[k * d + j] + drift + dw;
                w[(k + 1) * d + j] = w[k * d + j] + dw;
                if k + 1 < n {
                    inner[j] += self.cross[k] / dt * dw + self.resid_sd[k] * rng::normal(rng);
                }
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("bridge path".into()));
        }
        Ok(BridgePath { x: Path::new(dt, d, x)?, w: Path::new(dt, d, w)?, k: kk })
    }

    /// Replicate `r` of the bridge drawn from `seed`.
    pub fn sample(&self, z: &[f64], seed: u64, r: u32) -> Result<BridgePath> {
        let mut rng = rng::stream2(seed, r, BRIDGE_TAG);
        self.sample_with(z, &mut rng)
    }

    /// ρ∫₀^{t0}(t0−s)^{H−1/2}dX_s with the kernel averaged over each cell.
    pub fn endpoint_functional(&self, path: &BridgePath) -> Vec<f64> {
        let d = path.x.dim();
        let mut out = vec![0.0; d];
        for k in 0..self.spec.steps() {
            for j in 0..d {
                out[j] += self.spec.rho * self.outer[k] / self.spec.dt * (path.x.row(k + 1)[j] - path.x.row(k)[j]);
            }
        }
        out
    }
}

/// Convenience wrapper: replicate 0 of the bridge described by `spec`.
pub fn sample_bridge(spec: &BridgeSpec, seed: u64) -> Result<BridgePath> {
    BridgeSampler::new(spec.clone()).sample(&spec.z, seed, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::mean_se;

    #[test]
    fn starts_at_zero_and_mean_profile_ends_at_expected_level() {
        let spec = BridgeSpec::new(vec![1.0], 0.5, 0.3, 0.5 / 64.0).unwrap();
        let p = sample_bridge(&spec, 1).unwrap();
        assert_eq!(p.x.row(0)[0], 0.0);
        let m = spec.mean_profile();
        assert_eq!(m[0], 0.0);
        // the discrete endpoint functional of the mean path approaches z
        let s = BridgeSampler::new(spec.clone());
        let f: f64 = (0..64).map(|k| spec.rho * s.outer()[k] / spec.dt * (m[k + 1] - m[k])).sum();
        assert!((f - 1.0).abs() < 0.05, "{f}");
    }

    #[test]
    fn zero_endpoint_is_sign_symmetric() {
        let spec = BridgeSpec::new(vec![0.0], 0.25, 0.7, 0.25 / 32.0).unwrap();
        let s = BridgeSampler::new(spec);
        let ends: Vec<f64> = (0..4000).map(|r| s.sample(&[0.0], 3, r).unwrap().x.row(16)[0]).collect();
        let (m, se) = mean_se(&ends);
        assert!(m.abs() < 4.0 * se);
        let cubes: Vec<f64> = ends.iter().map(|v| v.powi(3)).collect();
        let (m3, se3) = mean_se(&cubes);
        assert!(m3.abs() < 4.0 * se3);
    }
}
