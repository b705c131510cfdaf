use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{self, Rng};

/// Constants of the one-sided growth and monotonicity conditions:
/// ⟨F(ξ₂)−F(ξ₁), ξ₂−ξ₁⟩ ≤ min{C1 − C2|Δ|², C3|Δ|²}, |F|+|DF| ≤ C_F(1+|ξ|)^N,
/// and ⟨F(ξ₂)−F(ξ₁), ξ₂−ξ₁⟩ ≤ −C4|Δ|² whenever |ξ₁|, |ξ₂| ≥ R.
#[derive(Clone, Debug, Serialize)]
pub struct DriftConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c_f: f64,
    pub growth_exponent: f64,
    pub radius: f64,
    pub has_bounded_df: bool,
    pub eventually_monotone: bool,
}

#[derive(Clone, Debug)]
pub enum DriftKind {
    Zero,
    Constant(Vec<f64>),
    Linear(DMatrix<f64>),
    /// y − y³ in every coordinate.
    DoubleWell,
    /// A·y − |y|²·y with A = [[−1, 2], [0, −1]].
    Rotational,
    /// F^s(ξ) = F(s·ξ)/s.
    Rescaled(Box<Drift>, f64),
}

#[derive(Clone, Debug)]
pub struct Drift {
    kind: DriftKind,
    dim: usize,
    name: String,
    pub constants: DriftConstants,
}

fn sym_max_eig(a: &DMatrix<f64>) -> f64 {
    let s = (a + a.transpose()) * 0.5;
    s.symmetric_eigenvalues().max()
}

const DEFAULT_RADIUS: f64 = 2.0;

// Calls `f` on s·y without allocating for small dimensions.
fn with_scaled<R>(y: &[f64], s: f64, f: impl FnOnce(&[f64]) -> R) -> R {
    if y.len() <= 8 {
        let mut buf = [0.0; 8];
        for (b, v) in buf.iter_mut().zip(y) {
            *b = s * v;
        }
        f(&buf[..y.len()])
    } else {
        let ys: Vec<f64> = y.iter().map(|v| s * v).collect();
        f(&ys)
    }
}

impl Drift {
    pub fn zero(dim: usize) -> Self {
        Self::constant(vec![0.0; dim]).renamed("zero", DriftKind::Zero)
    }

    pub fn constant(c: Vec<f64>) -> Self {
        let dim = c.len();
        let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        Self {
            kind: DriftKind::Constant(c),
            dim,
            name: "constant".into(),
            constants: DriftConstants {
                c1: f64::INFINITY,
                c2: 0.0,
                c3: 0.0,
                c4: 0.0,
                c_f: norm,
                growth_exponent: 1.0,
                radius: 0.0,
                has_bounded_df: true,
                eventually_monotone: false,
            },
        }
    }

    fn renamed(mut self, name: &str, kind: DriftKind) -> Self {
        self.name = name.into();
        self.kind = kind;
        self
    }

    pub fn linear(a: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() || a.nrows() == 0 {
            return Err(Error::InvalidArgument("linear drift needs a square matrix".into()));
        }
        let mu = sym_max_eig(&a);
        let dissipative = mu < 0.0;
        let norm = a.singular_values().max();
        Ok(Self {
            dim: a.nrows(),
            kind: DriftKind::Linear(a),
            name: "linear".into(),
            constants: DriftConstants {
                c1: if dissipative { 0.0 } else { f64::INFINITY },
                c2: if dissipative { -mu } else { 0.0 },
                c3: mu.max(0.0),
                c4: if dissipative { -mu } else { 0.0 },
                c_f: norm,
                growth_exponent: 1.0,
                radius: 0.0,
                has_bounded_df: true,
                eventually_monotone: dissipative,
            },
        })
    }

    pub fn double_well(dim: usize) -> Self {
        let r = DEFAULT_RADIUS;
        Self {
            kind: DriftKind::DoubleWell,
            dim,
            name: "double_well".into(),
            constants: DriftConstants {
                // Δ²(1 − (a²+ab+b²)) ≤ Δ² − Δ⁴/4 ≤ 4 − Δ² per coordinate
                c1: 4.0 * dim as f64,
                c2: 1.0,
                c3: 1.0,
                c4: if dim == 1 { r * r - 1.0 } else { 0.0 },
                c_f: 3.0,
                growth_exponent: 3.0,
                radius: r,
                has_bounded_df: false,
                // a large first coordinate does not control the others
                eventually_monotone: dim == 1,
            },
        }
    }

    pub fn rotational() -> Self {
        let a = Self::rotational_matrix();
        let r = DEFAULT_RADIUS;
        Self {
            dim: 2,
            name: "rotational".into(),
            constants: DriftConstants {
                // cubic damping gives ≤ −|Δ|⁴/4 ≤ 1 − |Δ|²
                c1: 1.0,
                c2: 1.0,
                c3: sym_max_eig(&a).max(0.0),
                // ⟨|a|²a − |b|²b, a − b⟩ ≥ ½(|a|²+|b|²)|a−b|²
                c4: r * r - sym_max_eig(&a),
                c_f: a.singular_values().max() + 3.0,
                growth_exponent: 3.0,
                radius: r,
                has_bounded_df: false,
                eventually_monotone: true,
            },
            kind: DriftKind::Rotational,
        }
    }

    pub fn rotational_matrix() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[-1.0, 2.0, 0.0, -1.0])
    }

    /// Drift of the rescaled equation, F^s(ξ) = F(s·ξ)/s, with its constants.
    pub fn rescaled(&self, s: f64) -> Result<Self> {
        if !(s > 0.0) {
            return Err(Error::InvalidArgument(format!("rescaling factor must be positive, got {s}")));
        }
        let c = &self.constants;
        let n = c.growth_exponent;
        Ok(Self {
            kind: DriftKind::Rescaled(Box::new(self.clone()), s),
            dim: self.dim,
            name: format!("{}_rescaled", self.name),
            constants: DriftConstants {
                c1: c.c1 / (s * s),
                c2: c.c2,
                c3: c.c3,
                c4: self.c4_at(c.radius).unwrap_or(0.0),
                c_f: c.c_f * s.max(1.0).powf(n) / s.min(1.0),
                growth_exponent: n,
                radius: c.radius / s,
                has_bounded_df: c.has_bounded_df,
                eventually_monotone: c.eventually_monotone,
            },
        })
    }

    /// Drift named in configuration files; `matrix` is used by `linear`.
    pub fn by_name(name: &str, dim: usize, matrix: Option<DMatrix<f64>>) -> Result<Self> {
        match name {
            "zero" => Ok(Self::zero(dim)),
            "double_well" => Ok(Self::double_well(dim)),
            "rotational" if dim == 2 => Ok(Self::rotational()),
            "rotational" => Err(Error::InvalidArgument("rotational drift is two-dimensional".into())),
            "linear" => Self::linear(matrix.ok_or_else(|| Error::InvalidArgument("linear drift needs a matrix".into()))?),
            _ => Err(Error::InvalidArgument(format!("unknown drift '{name}'"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn kind(&self) -> &DriftKind {
        &self.kind
    }

    /// Monotonicity constant valid outside B(0, r), if the drift has one there.
    pub fn c4_at(&self, r: f64) -> Option<f64> {
        match &self.kind {
            DriftKind::Linear(a) => {
                let mu = sym_max_eig(a);
                (mu < 0.0).then_some(-mu)
            }
            DriftKind::DoubleWell => (self.dim == 1 && r > 1.0).then_some(r * r - 1.0),
            DriftKind::Rotational => {
                let c = r * r - sym_max_eig(&Self::rotational_matrix());
                (c > 0.0).then_some(c)
            }
            DriftKind::Rescaled(inner, s) => inner.c4_at(s * r),
            DriftKind::Zero | DriftKind::Constant(_) => None,
        }
    }

    pub fn eval(&self, y: &[f64], out: &mut [f64]) {
        match &self.kind {
            DriftKind::Zero => out.iter_mut().for_each(|v| *v = 0.0),
            DriftKind::Constant(c) => out.copy_from_slice(c),
            DriftKind::Linear(a) => {
                for i in 0..self.dim {
                    out[i] = (0..self.dim).map(|j| a[(i, j)] * y[j]).sum();
                }
            }
            DriftKind::DoubleWell => {
                for i in 0..self.dim {
                    out[i] = y[i] - y[i] * y[i] * y[i];
                }
            }
            DriftKind::Rotational => {
                let r2 = y[0] * y[0] + y[1] * y[1];
                out[0] = -y[0] + 2.0 * y[1] - r2 * y[0];
                out[1] = -y[1] - r2 * y[1];
            }
            DriftKind::Rescaled(inner, s) => {
                with_scaled(y, *s, |ys| inner.eval(ys, out));
                out.iter_mut().for_each(|v| *v /= s);
            }
        }
    }

    pub fn eval_vec(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval(y, &mut out);
        out
    }

    /// Jacobian written row-major into `out` (length d²).
    pub fn jacobian_into(&self, y: &[f64], out: &mut [f64]) {
        let d = self.dim;
        match &self.kind {
            DriftKind::Zero | DriftKind::Constant(_) => out.iter_mut().for_each(|v| *v = 0.0),
            DriftKind::Linear(a) => {
                for i in 0..d {
                    for j in 0..d {
                        out[i * d + j] = a[(i, j)];
                    }
                }
            }
            DriftKind::DoubleWell => {
                out.iter_mut().for_each(|v| *v = 0.0);
                for i in 0..d {
                    out[i * d + i] = 1.0 - 3.0 * y[i] * y[i];
                }
            }
            DriftKind::Rotational => {
                let r2 = y[0] * y[0] + y[1] * y[1];
                out[0] = -1.0 - r2 - 2.0 * y[0] * y[0];
                out[1] = 2.0 - 2.0 * y[0] * y[1];
                out[2] = -2.0 * y[1] * y[0];
                out[3] = -1.0 - r2 - 2.0 * y[1] * y[1];
            }
            DriftKind::Rescaled(inner, s) => with_scaled(y, *s, |ys| inner.jacobian_into(ys, out)),
        }
    }

    pub fn jacobian(&self, y: &[f64]) -> DMatrix<f64> {
        let mut buf = vec![0.0; self.dim * self.dim];
        self.jacobian_into(y, &mut buf);
        DMatrix::from_row_slice(self.dim, self.dim, &buf)
    }

    /// Checks the declared constants on `samples` random pairs drawn at scale
    /// `scale`, and DF against central differences.
    pub fn audit(&self, rng: &mut Rng, samples: usize, scale: f64) -> DriftAudit {
        let d = self.dim;
        let c = &self.constants;
        let mut report = DriftAudit::default();
        let draw = |rng: &mut Rng| -> Vec<f64> { (0..d).map(|_| scale * rng::normal(rng)).collect() };
        for _ in 0..samples {
            let a = draw(rng);
            let b = draw(rng);
            let fa = self.eval_vec(&a);
            let fb = self.eval_vec(&b);
            let delta2: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum();
            let inner: f64 = (0..d).map(|i| (fb[i] - fa[i]) * (b[i] - a[i])).sum();
            let slack = 1e-9 * (1.0 + inner.abs());
            let bound = (c.c1 - c.c2 * delta2).min(c.c3 * delta2);
            if inner > bound + slack {
                report.one_sided_violations += 1;
            }
            if c.eventually_monotone {
                // push both points outside the radius
                let lift = |v: &[f64]| -> Vec<f64> {
                    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
                    let target = c.radius + n;
                    v.iter().map(|x| x / n * target).collect()
                };
                let (la, lb) = (lift(&a), lift(&b));
                let fla = self.eval_vec(&la);
                let flb = self.eval_vec(&lb);
                let d2: f64 = la.iter().zip(&lb).map(|(x, y)| (x - y) * (x - y)).sum();
                let inn: f64 = (0..d).map(|i| (flb[i] - fla[i]) * (lb[i] - la[i])).sum();
                if inn > -c.c4 * d2 + 1e-9 * (1.0 + inn.abs()) {
                    report.monotone_violations += 1;
                }
            }
            let jac = self.jacobian(&a);
            for j in 0..d {
                let h = 1e-6 * (1.0 + a[j].abs());
                let mut ap = a.clone();
                let mut am = a.clone();
                ap[j] += h;
                am[j] -= h;
                let fp = self.eval_vec(&ap);
                let fm = self.eval_vec(&am);
                for i in 0..d {
                    let fd = (fp[i] - fm[i]) / (2.0 * h);
                    let err = (fd - jac[(i, j)]).abs() / (1.0 + jac[(i, j)].abs());
                    report.max_jacobian_rel_error = report.max_jacobian_rel_error.max(err);
                }
            }
        }
        report.samples = samples;
        report
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct DriftAudit {
    pub samples: usize,
    pub one_sided_violations: usize,
    pub monotone_violations: usize,
    pub max_jacobian_rel_error: f64,
}

impl DriftAudit {
    pub fn passed(&self) -> bool {
        self.one_sided_violations == 0 && self.monotone_violations == 0 && self.max_jacobian_rel_error <= 1e-5
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn library_drifts_pass_their_audits() {
        let mut rng = rng::stream(11, 0);
        let drifts = vec![
            Drift::double_well(1),
            Drift::double_well(3),
            Drift::rotational(),
            Drift::linear(DMatrix::from_row_slice(2, 2, &[-1.0, 0.5, -0.5, -2.0])).unwrap(),
            Drift::double_well(1).rescaled(4.0).unwrap(),
            Drift::rotational().rescaled(0.5).unwrap(),
            Drift::zero(2),
        ];
        for f in drifts {
            for scale in [0.3, 1.0, 3.0] {
                let a = f.audit(&mut rng, 2000, scale);
                assert!(a.passed(), "{}: {a:?}", f.name());
            }
        }
    }

    #[test]
    fn rescaled_drift_definition() {
        let f = Drift::double_well(1);
        let g = f.rescaled(3.0).unwrap();
        let y = [0.7];
        assert!((g.eval_vec(&y)[0] - f.eval_vec(&[3.0 * 0.7])[0] / 3.0).abs() < 1e-15);
        assert_eq!(g.c4_at(1.0), Some(8.0));
    }

    #[test]
    fn unknown_names_rejected() {
        assert!(Drift::by_name("nope", 1, None).is_err());
        assert!(Drift::by_name("rotational", 3, None).is_err());
        assert!(Drift::by_name("linear", 1, None).is_err());
    }
}
