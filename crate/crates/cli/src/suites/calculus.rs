use statrs::function::gamma::gamma;

use fracrds::fraccalc::{frac_derivative_regularized, frac_integral, FracOrder};
use fracrds::quad::tanh_sinh;
use fracrds::stats::linear_fit;
use fracrds::{Path, Result};

use super::Check;

fn sup_error(p: &Path, f: impl Fn(f64) -> f64) -> f64 {
    (0..p.len()).map(|k| (p.row(k)[0] - f(p.time(k))).abs()).fold(0.0, f64::max)
}

fn order(ns: &[usize], errs: &[f64]) -> f64 {
    let x: Vec<f64> = ns.iter().map(|&n| -(n as f64).ln()).collect();
    let y: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    linear_fit(&x, &y).1
}

pub(super) fn fractional_calculus(_seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let n = 4096;
    let dt = 1.0 / n as f64;
    for a in [0.3, 0.5, 0.7] {
        let alpha = FracOrder::new(a)?;
        let one = frac_integral(alpha, &Path::from_fn(dt, 1, n, |_| vec![1.0]));
        checks.push(Check::at_most(format!("alpha={a} J of 1"), sup_error(&one, |t| t.powf(a) / gamma(1.0 + a)), 1e-6));
        for g in [1.5, 2.0, 3.0] {
            let p = frac_integral(alpha, &Path::from_fn(dt, 1, n, |t| vec![t.powf(g)]));
            let exact = |t: f64| gamma(g + 1.0) / gamma(g + 1.0 + a) * t.powf(g + a);
            // the closed form itself against direct quadrature at t = 1
            let quad = tanh_sinh(|u, _, right| right.powf(a - 1.0) * u.powf(g), 0.0, 1.0, 1e-13) / gamma(a);
            checks.push(Check::at_most(format!("alpha={a} closed form of J t^{g} vs quadrature"), (quad - exact(1.0)).abs(), 1e-10));
            checks.push(Check::at_most(format!("alpha={a} J t^{g}"), sup_error(&p, exact), 1e-6));
        }
    }

    let ns = [64usize, 128, 256, 512, 1024];
    for (a, b) in [(0.3, 0.4), (0.5, 0.25), (0.2, 0.7)] {
        let (fa, fb) = (FracOrder::new(a)?, FracOrder::new(b)?);
        let errs: Vec<f64> = ns
            .iter()
            .map(|&n| {
                let dt = 1.0 / n as f64;
                let p = frac_integral(fb, &frac_integral(fa, &Path::from_fn(dt, 1, n, |_| vec![1.0])));
                sup_error(&p, |t| t.powf(a + b) / gamma(1.0 + a + b))
            })
            .collect();
        let predicted = a + b;
        checks.push(Check::at_least(format!("semigroup alpha={a} beta={b} order / predicted"), order(&ns, &errs) / predicted, 0.8).with(format!("sup errors {}", super::sci(&errs))));
        let monotone = errs.windows(2).all(|w| w[1] < w[0]);
        checks.push(Check::holds(format!("semigroup alpha={a} beta={b} error monotone under refinement"), monotone));
    }
    for a in [0.3, 0.5, 0.7] {
        let alpha = FracOrder::new(a)?;
        let errs: Vec<f64> = ns
            .iter()
            .map(|&n| {
                let f = Path::from_fn(1.0 / n as f64, 1, n, |t| vec![t]);
                let back = frac_derivative_regularized(alpha, &frac_integral(alpha, &f));
                sup_error(&back.regular, |t| t)
            })
            .collect();
        // interpolating t^{1+α} costs dt^{1+α}, the derivative takes back dt^α
        checks.push(Check::at_least(format!("inversion alpha={a} order / predicted"), order(&ns, &errs), 0.8).with(format!("sup errors {}", super::sci(&errs))));
    }
    Ok(checks)
}
