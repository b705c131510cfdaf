//! Riemann–Liouville fractional integral and regularised fractional
//! derivative on uniform grids, plus discrete Hölder seminorms.
//!
//! Paths are piecewise linear, so each cell contributes closed-form moments
//! of the power kernel. The derivative is only offered in split form:
//! 𝒥^{-α} f = 𝒥̃^{-α} f + f(0)/Γ(1−α) · t^{-α}, where the regular part
//! 𝒥̃^{-α} f is the Marchaud derivative of f − f(0).

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::kernel::{convolve, pow_diff};
use crate::path::Path;
use crate::stats::linear_fit;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FracOrder(f64);

impl FracOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("fractional order {alpha} outside (0,1)")));
        }
        Ok(Self(alpha))
    }
    pub fn value(self) -> f64 {
        self.0
    }
}

// ∫_i^{i+1} x^{p-1} dx
fn moment0(i: f64, p: f64) -> f64 {
    pow_diff(i, 1.0, p) / p
}

/// Reusable weights for 𝒥^α on `n` steps of size `h`.
#[derive(Clone, Debug)]
pub struct IntegralPlan {
    scale: f64,
    // weight of the cell's left node value / right node value, by cell distance
    left: Vec<f64>,
    right: Vec<f64>,
}

impl IntegralPlan {
    pub fn new(alpha: FracOrder, h: f64, n: usize) -> Self {
        let a = alpha.value();
        let mut left = Vec::with_capacity(n);
        let mut right = Vec::with_capacity(n);
        for i in 0..n {
            let x = i as f64;
            let m1 = moment0(x, a + 1.0);
            let m0 = moment0(x, a);
            // ∫ x^{a-1}(x - i) and ∫ x^{a-1}(i + 1 - x)
            left.push(m1 - x * m0);
            right.push((x + 1.0) * m0 - m1);
        }
        Self { scale: h.powf(a) / gamma(a), left, right }
    }

    /// (𝒥^α f)(t_k) for k = 0..=n from node values f_0..f_n.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let n = f.len() - 1;
        let cl = convolve(&f[..n], &self.left[..n]);
        let cr = convolve(&f[1..], &self.right[..n]);
        let mut out = vec![0.0; n + 1];
        for k in 1..=n {
            out[k] = self.scale * (cl[k - 1] + cr[k - 1]);
        }
        out
    }
}

/// Reusable weights for the regular part of 𝒥^{-α} on `n` steps of size `h`.
#[derive(Clone, Debug)]
pub struct DerivativePlan {
    alpha: f64,
    h: f64,
    p: Vec<f64>,
    q: Vec<f64>,
    total: Vec<f64>,
}

impl DerivativePlan {
    pub fn new(alpha: FracOrder, h: f64, n: usize) -> Self {
        let a = alpha.value();
        let mut p = Vec::with_capacity(n);
        let mut q = Vec::with_capacity(n);
        for i in 0..n {
            let x = i as f64;
            if i == 0 {
                p.push(1.0 / (1.0 - a));
                q.push(0.0);
                continue;
            }
            let m1 = moment0(x, 1.0 - a);
            let m0 = moment0(x, -a);
            p.push(m1 - x * m0);
            q.push((x + 1.0) * m0 - m1);
        }
        let mut total = vec![0.0; n + 1];
        for k in 1..=n {
            total[k] = total[k - 1] + p[k - 1] + q[k - 1];
        }
        Self { alpha: a, h, p, q, total }
    }

    /// Marchaud derivative of g = f − f(0) at the nodes; zero at t = 0.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let n = f.len() - 1;
        let a = self.alpha;
        let g: Vec<f64> = f.iter().map(|v| v - f[0]).collect();
        let cp = convolve(&g[..n], &self.p[..n]);
        let cq = convolve(&g[1..], &self.q[..n]);
        let c = 1.0 / gamma(1.0 - a);
        let mut out = vec![0.0; n + 1];
        for k in 1..=n {
            let t = k as f64 * self.h;
            let integral = g[k] * self.total[k] - cp[k - 1] - cq[k - 1];
            out[k] = c * (g[k] / t.powf(a) + a * self.h.powf(-a) * integral);
        }
        out
    }
}

fn per_component(f: &Path, op: impl Fn(&[f64]) -> Vec<f64>) -> Path {
    let d = f.dim();
    let mut out = Path::zeros(f.dt(), d, f.steps());
    for j in 0..d {
        for (k, v) in op(&f.component(j)).into_iter().enumerate() {
            out.row_mut(k)[j] = v;
        }
    }
    out
}

/// (𝒥^α f)(t) = Γ(α)^{-1} ∫_0^t (t−s)^{α−1} f(s) ds at the grid nodes.
pub fn frac_integral(alpha: FracOrder, f: &Path) -> Path {
    let plan = IntegralPlan::new(alpha, f.dt(), f.steps());
    per_component(f, |x| plan.apply(x))
}

/// Split fractional derivative: regular part, per-component coefficient
/// f(0)/Γ(1−α) of t^{-α}, and a warning when the estimated Hölder exponent
/// of f does not exceed α.
#[derive(Clone, Debug)]
pub struct SplitDerivative {
    pub regular: Path,
    pub singular: Vec<f64>,
    pub warning: Option<String>,
}

pub fn frac_derivative_regularized(alpha: FracOrder, f: &Path) -> SplitDerivative {
    let plan = DerivativePlan::new(alpha, f.dt(), f.steps());
    let regular = per_component(f, |x| plan.apply(x));
    let c = 1.0 / gamma(1.0 - alpha.value());
    let singular = f.row(0).iter().map(|v| c * v).collect();
    let beta = holder_exponent(f);
    let warning = (beta <= alpha.value()).then(|| format!("estimated Hölder exponent {beta:.3} does not exceed {:.3}", alpha.value()));
    SplitDerivative { regular, singular, warning }
}

fn separations(n: usize) -> Vec<usize> {
    let mut v = Vec::new();
    let mut s = 1;
    while s <= n {
        v.push(s);
        s *= 2;
    }
    v
}

fn max_oscillation(f: &Path, sep: usize) -> f64 {
    let mut best: f64 = 0.0;
    for i in 0..f.len() - sep {
        let d2: f64 = f.row(i).iter().zip(f.row(i + sep)).map(|(a, b)| (a - b) * (a - b)).sum();
        best = best.max(d2);
    }
    best.sqrt()
}

/// Discrete β-Hölder seminorm over all pairs at dyadic separations; a lower
/// bound of the continuum seminorm.
pub fn holder_norm(f: &Path, beta: f64) -> f64 {
    separations(f.steps())
        .into_iter()
        .map(|s| max_oscillation(f, s) / (s as f64 * f.dt()).powf(beta))
        .fold(0.0, f64::max)
}

/// Slope of log max-oscillation against log separation over dyadic scales
/// coarser than the grid; a heuristic Hölder exponent.
pub fn holder_exponent(f: &Path) -> f64 {
    let seps: Vec<usize> = separations(f.steps()).into_iter().filter(|&s| s >= 4 && s <= f.steps() / 2).collect();
    let pts: Vec<(f64, f64)> = seps
        .iter()
        .map(|&s| (s, max_oscillation(f, s)))
        .filter(|&(_, o)| o > 0.0)
        .map(|(s, o)| ((s as f64).ln(), o.ln()))
        .collect();
    if pts.len() < 2 {
        return 1.0;
    }
    let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    linear_fit(&x, &y).1.min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, f: impl Fn(f64) -> f64) -> Path {
        Path::from_fn(1.0 / n as f64, 1, n, |t| vec![f(t)])
    }

    #[test]
    fn integral_of_one() {
        let a = FracOrder::new(0.5).unwrap();
        let r = frac_integral(a, &grid(64, |_| 1.0));
        assert!((r.row(64)[0] - 1.0 / gamma(1.5)).abs() < 1e-13);
        assert_eq!(r.row(0)[0], 0.0);
    }

    #[test]
    fn integral_exact_for_linear() {
        // 𝒥^α t = t^{1+α}/Γ(2+α), exact for piecewise-linear data
        let a = 0.3;
        let r = frac_integral(FracOrder::new(a).unwrap(), &grid(50, |t| t));
        for k in [1usize, 17, 50] {
            let t = k as f64 / 50.0;
            assert!((r.row(k)[0] - t.powf(1.0 + a) / gamma(2.0 + a)).abs() < 1e-13);
        }
    }

    #[test]
    fn derivative_of_constant_is_purely_singular() {
        let a = FracOrder::new(0.4).unwrap();
        let s = frac_derivative_regularized(a, &grid(32, |_| 2.5));
        assert!(s.regular.data().iter().all(|&v| v == 0.0));
        assert!((s.singular[0] - 2.5 * 0.6 / gamma(1.6)).abs() < 1e-14);
    }

    #[test]
    fn derivative_exact_for_linear() {
        // 𝒥^{-α} t = t^{1−α}/Γ(2−α)
        let a = 0.35;
        let s = frac_derivative_regularized(FracOrder::new(a).unwrap(), &grid(40, |t| t));
        for k in [1usize, 9, 40] {
            let t = k as f64 / 40.0;
            assert!((s.regular.row(k)[0] - t.powf(1.0 - a) / gamma(2.0 - a)).abs() < 1e-12);
        }
        assert!(s.warning.is_none());
    }

    #[test]
    fn holder_examples() {
        assert_eq!(holder_norm(&grid(64, |_| 3.0), 0.5), 0.0);
        assert!((holder_norm(&grid(64, |t| t), 1.0) - 1.0).abs() < 1e-14);
        assert!((holder_norm(&grid(1024, f64::sqrt), 0.5) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rough_path_triggers_warning() {
        let n = 4096;
        let mut rng = crate::rng::stream(5, 0);
        let mut w = vec![0.0];
        for _ in 0..n {
            let last = *w.last().unwrap();
            w.push(last + crate::rng::normal(&mut rng) / (n as f64).sqrt());
        }
        let p = Path::new(1.0 / n as f64, 1, w).unwrap();
        let beta = holder_exponent(&p);
        assert!((beta - 0.5).abs() < 0.15, "{beta}");
        let s = frac_derivative_regularized(FracOrder::new(0.7).unwrap(), &p);
        assert!(s.warning.is_some());
    }
}
