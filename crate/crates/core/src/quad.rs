//! Numerical quadrature: adaptive Gauss–Kronrod and double-exponential rules.
//!
//! The double-exponential rules never evaluate the integrand at an endpoint,
//! which is what the algebraic endpoint singularities in this crate need.

use std::f64::consts::FRAC_PI_2;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive 7/15-point Gauss–Kronrod on a finite interval.
pub fn gauss_kronrod<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, err: f64, tol: f64, depth: u32) -> f64 {
        if err <= tol || depth == 0 || (b - a).abs() < 1e-15 * a.abs().max(1.0) {
            return whole;
        }
        let m = 0.5 * (a + b);
        let (l, el) = gk15(f, a, m);
        let (r, er) = gk15(f, m, b);
        rec(f, a, m, l, el, 0.5 * tol, depth - 1) + rec(f, m, b, r, er, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let (whole, err) = gk15(&f, a, b);
    let tol = (rel_tol * whole.abs()).max(1e-300);
    rec(&f, a, b, whole, err, tol, 60)
}

/// Tanh-sinh quadrature on [a, b]. The integrand receives `(x, x - a, b - x)`
/// so that singular factors at either end can be evaluated without
/// cancellation.
pub fn tanh_sinh<F: Fn(f64, f64, f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    let half = 0.5 * (b - a);
    let node = |t: f64| -> f64 {
        let u = FRAC_PI_2 * t.sinh();
        let ch = u.cosh();
        let w = FRAC_PI_2 * t.cosh() / (ch * ch);
        // distances to the endpoints in units of `half`
        let (da, db) = if u >= 0.0 {
            let e = 2.0 / ((2.0 * u).exp() + 1.0);
            (2.0 - e, e)
        } else {
            let e = 2.0 / ((-2.0 * u).exp() + 1.0);
            (e, 2.0 - e)
        };
        let xa = half * da;
        let xb = half * db;
        if xa <= 0.0 || xb <= 0.0 || !w.is_finite() || w == 0.0 {
            return 0.0;
        }
        let x = if u >= 0.0 { b - xb } else { a + xa };
        let v = f(x, xa, xb) * w;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    de_refine(node, 6.5, half, rel_tol)
}

/// Exp-sinh quadrature on [a, ∞). The integrand receives `(x, x - a)`.
pub fn exp_sinh<F: Fn(f64, f64) -> f64>(f: F, a: f64, rel_tol: f64) -> f64 {
    let node = |t: f64| -> f64 {
        let e = (FRAC_PI_2 * t.sinh()).exp();
        let w = FRAC_PI_2 * t.cosh() * e;
        if e == 0.0 || !e.is_finite() || !w.is_finite() {
            return 0.0;
        }
        let v = f(a + e, e) * w;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    de_refine(node, 4.5, 1.0, rel_tol)
}

// Trapezoid sums over t ∈ [-tmax, tmax] with halving step until two levels agree.
fn de_refine<N: Fn(f64) -> f64>(node: N, tmax: f64, scale: f64, rel_tol: f64) -> f64 {
    let mut h = 0.5;
    let n0 = (tmax / h) as i64;
    let mut sum: f64 = (-n0..=n0).map(|k| node(k as f64 * h)).sum();
    let mut prev = sum * h;
    for _ in 0..10 {
        h *= 0.5;
        let n = (tmax / h) as i64;
        let mut add = 0.0;
        let mut k = -n + 1;
        if k % 2 == 0 {
            k += 1;
        }
        while k <= n {
            add += node(k as f64 * h);
            k += 2;
        }
        sum += add;
        let cur = sum * h;
        if (cur - prev).abs() <= rel_tol * cur.abs() {
            return cur * scale;
        }
        prev = cur;
    }
    prev * scale
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_kronrod_polynomial_and_exp() {
        let v = gauss_kronrod(|x| x * x * x, 0.0, 2.0, 1e-12);
        assert!((v - 4.0).abs() < 1e-12);
        let v = gauss_kronrod(f64::exp, 0.0, 1.0, 1e-12);
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn tanh_sinh_endpoint_singularity() {
        // ∫_0^1 x^{-0.7} dx = 1/0.3
        let v = tanh_sinh(|_, xa, _| xa.powf(-0.7), 0.0, 1.0, 1e-12);
        assert!((v - 1.0 / 0.3).abs() < 1e-9, "{v}");
        // ∫_0^1 (1-x)^{-0.5} dx = 2
        let v = tanh_sinh(|_, _, xb| xb.powf(-0.5), 0.0, 1.0, 1e-12);
        assert!((v - 2.0).abs() < 1e-10, "{v}");
    }

    #[test]
    fn exp_sinh_decaying_tail() {
        // ∫_1^∞ x^{-2.5} dx = 1/1.5
        let v = exp_sinh(|x, _| x.powf(-2.5), 1.0, 1e-12);
        assert!((v - 1.0 / 1.5).abs() < 1e-10, "{v}");
        let v = exp_sinh(|x, _| (-x).exp(), 0.0, 1e-12);
        assert!((v - 1.0).abs() < 1e-10, "{v}");
    }
}
