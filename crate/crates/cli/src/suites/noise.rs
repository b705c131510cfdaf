use rand::Rng as _;

use fracrds::noise::{
    concat_p, history_operator, mvn_operator, mvn_value, shift_theta, shift_vartheta, two_sided_fbm, FbmSampler, OperatorOptions,
};
use fracrds::rng::{self, Rng};
use fracrds::stats::{linear_fit, mean_se};
use fracrds::{PastPath, Result};

use super::{max_abs, max_diff, Check};

const HURST: [f64; 3] = [0.3, 0.5, 0.7];

fn fbm_cov(h: f64, s: f64, t: f64) -> f64 {
    0.5 * (s.powf(2.0 * h) + t.powf(2.0 * h) - (t - s).abs().powf(2.0 * h))
}

pub(super) fn fbm_covariance(seed: u64) -> Result<Vec<Check>> {
    let n = 256;
    let dt = 1.0 / n as f64;
    let reps = 10_000;
    let mut pick = rng::stream2(seed, 0xC1, 0);
    let pairs: Vec<(usize, usize)> = (0..10).map(|_| (pick.random_range(1..=n), pick.random_range(1..=n))).collect();
    let mut checks = Vec::new();
    for h in HURST {
        let sampler = FbmSampler::new(h, n, dt)?;
        let mut prods = vec![Vec::with_capacity(reps); pairs.len()];
        for r in 0..reps {
            let path = sampler.sample(&mut rng::stream2(seed, r as u32, 1));
            for (p, &(i, j)) in prods.iter_mut().zip(&pairs) {
                p.push(path[i] * path[j]);
            }
        }
        // worst deviation in units of its standard error
        let mut worst: f64 = 0.0;
        let mut at = (0.0, 0.0);
        for (p, &(i, j)) in prods.iter().zip(&pairs) {
            let (m, se) = mean_se(p);
            let (s, t) = (i as f64 * dt, j as f64 * dt);
            let z = (m - fbm_cov(h, s, t)).abs() / se;
            if z > worst {
                worst = z;
                at = (s, t);
            }
        }
        checks.push(Check::at_most(format!("H={h} max |cov - exact| / SE"), worst, 3.0).with(format!("worst pair (s, t) = ({:.4}, {:.4})", at.0, at.1)));
    }
    Ok(checks)
}

pub(crate) fn brownian_past(r: &mut Rng, dt: f64, d: usize, steps: usize) -> PastPath {
    let mut data = vec![0.0; d * (steps + 1)];
    for k in 1..=steps {
        for j in 0..d {
            data[k * d + j] = data[(k - 1) * d + j] + dt.sqrt() * rng::normal(r);
        }
    }
    PastPath::new(dt, d, data).expect("anchored at zero")
}

// a few ulps of the largest value involved
fn ulps(scale: f64) -> f64 {
    8.0 * f64::EPSILON * scale.max(1.0)
}

fn bump(s: f64, a: f64, b: f64) -> f64 {
    if s <= a || s >= b {
        return 0.0;
    }
    (std::f64::consts::PI * (s - a) / (b - a)).sin().powi(4)
}

pub(super) fn identities(seed: u64) -> Result<Vec<Check>> {
    let dt = 0.01;
    let mut r = rng::stream2(seed, 0xC2, 0);
    let mut worst = [0.0f64; 6];
    let names = [
        "vartheta_t P_t = id",
        "P_{t+s} = P_t(P_s, vartheta_s)",
        "vartheta_{t+s} = vartheta_t vartheta_s",
        "theta_t theta_{-t} = id",
        "theta_{t+s} = theta_t theta_s",
        "fBm increment independent of the cut",
    ];
    let mut rr_scale: f64 = 0.0;
    for i in 0..20 {
        let d = 1 + i % 2;
        let n_minus = r.random_range(200..400);
        let n_plus = r.random_range(100..200);
        let wm = brownian_past(&mut r, dt, d, n_minus);
        let wp = brownian_past(&mut r, dt, d, n_plus);
        let qs = r.random_range(0..n_plus / 2);
        let qt = r.random_range(0..=(n_plus - qs));
        let (t, s) = (qt as f64 * dt, qs as f64 * dt);
        let scale = max_abs(wm.data()).max(max_abs(wp.data()));
        let rel = |x: f64| x / ulps(scale);

        let back = shift_vartheta(t, &concat_p(t, &wm, &wp)?)?;
        worst[0] = worst[0].max(rel(max_diff(back.data(), wm.data())));

        let lhs = concat_p(t + s, &wm, &wp)?;
        let rhs = concat_p(t, &concat_p(s, &wm, &wp)?, &shift_vartheta(s, &wp)?)?;
        worst[1] = worst[1].max(rel(max_diff(lhs.data(), rhs.data())));

        let lhs = shift_vartheta(t + s, &wp)?;
        let rhs = shift_vartheta(t, &shift_vartheta(s, &wp)?)?;
        worst[2] = worst[2].max(rel(max_diff(lhs.data(), rhs.data())));

        // θ_{−t} needs t within the past horizon too, which always holds here
        let (m1, p1) = shift_theta(-t, (&wm, &wp))?;
        let (m2, p2) = shift_theta(t, (&m1, &p1))?;
        let (m3, p3) = shift_theta(t, (&wm, &wp))?;
        let (m4, p4) = shift_theta(-t, (&m3, &p3))?;
        let e = max_diff(m2.data(), wm.data()).max(max_diff(p2.data(), wp.data()));
        let e = e.max(max_diff(m4.data(), wm.data())).max(max_diff(p4.data(), wp.data()));
        worst[3] = worst[3].max(rel(e));

        let (a, b) = shift_theta(t + s, (&wm, &wp))?;
        let (c1, c2) = shift_theta(s, (&wm, &wp))?;
        let (c, e2) = shift_theta(t, (&c1, &c2))?;
        worst[4] = worst[4].max(rel(max_diff(a.data(), c.data()).max(max_diff(b.data(), e2.data()))));

        // B_τ read off 𝒟_H P_t and 𝒟_H P_s for τ ≤ s ≤ t
        let (qa, qb) = if qt >= qs { (qt, qs) } else { (qs, qt) };
        if qb > 0 {
            let tau = r.random_range(1..=qb);
            let h = 0.3 + 0.4 * (i % 2) as f64;
            let incr = |q: usize| -> Result<Vec<f64>> {
                let p = concat_p(q as f64 * dt, &wm, &wp)?;
                let hi = mvn_value(&p, h, q - tau);
                let lo = mvn_value(&p, h, q);
                Ok(hi.iter().zip(&lo).map(|(x, y)| x - y).collect())
            };
            let (ua, ub) = (incr(qa)?, incr(qb)?);
            rr_scale = rr_scale.max(max_abs(&ua));
            worst[5] = worst[5].max(max_diff(&ua, &ub));
        }
    }
    let mut checks: Vec<Check> = names[..5].iter().zip(&worst[..5]).map(|(n, &w)| Check::at_most(format!("{n} (units of 8 eps max|w|)"), w, 1.0)).collect();
    checks.push(Check::at_most(names[5], worst[5], 1e-10 * rr_scale.max(1.0)));

    // operator identities on smooth compactly supported paths
    let opts = OperatorOptions { tolerance: f64::INFINITY, window: None };
    let dts = 1.0 / 32.0;
    let steps = (200.0 / dts) as usize;
    let paths = [
        PastPath::from_fn(dts, 1, steps, |s| vec![bump(s, -3.0, -1.0)]),
        PastPath::from_fn(dts, 1, steps, |s| vec![bump(s, -4.0, -0.5) - 0.5 * bump(s, -2.5, -1.5)]),
    ];
    let half = mvn_operator(&paths[0], 0.5, &opts)?.value;
    checks.push(Check::exact("D_{1/2} = id", max_diff(half.data(), paths[0].data()), 0.0));
    let m = (5.0 / dts) as usize;
    for h in [0.3, 0.7] {
        let mut c = Vec::new();
        for w in &paths {
            let b = mvn_operator(&mvn_operator(w, h, &opts)?.value, 1.0 - h, &opts)?.value;
            let num: f64 = (0..m).map(|k| b.row(k)[0] * w.row(k)[0]).sum();
            let den: f64 = (0..m).map(|k| w.row(k)[0].powi(2)).sum();
            c.push(num / den);
        }
        let spread = (c[0] - c[1]).abs() / c[0].abs();
        checks.push(Check::at_most(format!("H={h} D_(1-H) D_H proportional to id: relative spread of c_H"), spread, 0.02).with(format!("c_H = {:.5}", c[0])));
    }

    // linearity of the moving-average and history operators
    let mut lr = rng::stream2(seed, 0xC2, 1);
    let w1 = brownian_past(&mut lr, dt, 2, 500);
    let w2 = brownian_past(&mut lr, dt, 2, 500);
    let (a, b) = (1.7, -0.6);
    let mix = w1.combine(a, &w2, b)?;
    for h in [0.3, 0.7] {
        let o = |w: &PastPath| mvn_operator(w, h, &opts).map(|t| t.value);
        let (y1, y2, y) = (o(&w1)?, o(&w2)?, o(&mix)?);
        let want: Vec<f64> = y1.data().iter().zip(y2.data()).map(|(u, v)| a * u + b * v).collect();
        checks.push(Check::at_most(format!("H={h} D_H linear"), max_diff(y.data(), &want), 1e-12 * max_abs(&want).max(1.0)));
        let p = |w: &PastPath| history_operator(w, h, 1.0, dt, &opts).map(|t| t.value);
        let (y1, y2, y) = (p(&w1)?, p(&w2)?, p(&mix)?);
        let want: Vec<f64> = y1.data().iter().zip(y2.data()).map(|(u, v)| a * u + b * v).collect();
        checks.push(Check::at_most(format!("H={h} history operator linear"), max_diff(y.data(), &want), 1e-12 * max_abs(&want).max(1.0)));
    }
    Ok(checks)
}

fn subsample(w: &PastPath, f: usize) -> Result<PastPath> {
    let d = w.dim();
    let n = w.steps() / f;
    let data = (0..=n).flat_map(|k| w.row(k * f).to_vec()).collect();
    PastPath::new(w.dt() * f as f64, d, data)
}

pub(super) fn decomposition(seed: u64) -> Result<Vec<Check>> {
    let t_end = 1.0;
    let fine = 2048;
    let dtf = t_end / fine as f64;
    let past = 50 * fine;
    let coarse = [32usize, 16, 8];
    let paths = 4;
    let opts = OperatorOptions { tolerance: f64::INFINITY, window: Some(t_end) };
    let mut checks = Vec::new();
    for h in [0.3, 0.7] {
        let mut resid = vec![0.0; coarse.len()];
        let mut same_grid: f64 = 0.0;
        for p in 0..paths {
            let mut r = rng::stream2(seed, 0xC3, p);
            let wm = brownian_past(&mut r, dtf, 1, past);
            let wp = brownian_past(&mut r, dtf, 1, fine);
            // B_t(P_T ω) = 𝒟_H P_T ω(t − T) − 𝒟_H P_T ω(−T)
            let d = mvn_operator(&concat_p(t_end, &wm, &wp)?, h, &opts)?.value;
            let reference: Vec<f64> = (0..=fine).map(|q| d.row(fine - q)[0] - d.row(fine)[0]).collect();
            let direct = two_sided_fbm(&wm, &wp, h, t_end, &opts)?.value;
            same_grid = same_grid.max(max_diff(direct.data(), &reference));
            for (slot, &f) in resid.iter_mut().zip(&coarse) {
                let b = two_sided_fbm(&subsample(&wm, f)?, &subsample(&wp, f)?, h, t_end, &opts)?.value;
                let e = (0..b.len()).map(|q| (b.row(q)[0] - reference[q * f]).abs()).fold(0.0, f64::max);
                *slot += e / paths as f64;
            }
        }
        checks.push(Check::at_most(format!("H={h} same-grid decomposition residual"), same_grid, 1e-10));
        let c: Vec<f64> = coarse.iter().zip(&resid).map(|(&f, e)| e / (f as f64 * dtf).powf(h / 2.0)).collect();
        for k in 1..c.len() {
            let ratio = c[k] / c[k - 1];
            checks.push(
                Check::holds(format!("H={h} fitted C stable under refinement {k}"), (0.5..=2.0).contains(&ratio))
                    .with(format!("C = {:.4} -> {:.4}, ratio {ratio:.3}", c[k - 1], c[k])),
            );
        }
        let logs: Vec<f64> = coarse.iter().map(|&f| (f as f64 * dtf).ln()).collect();
        let (_, order, _) = linear_fit(&logs, &resid.iter().map(|e| e.ln()).collect::<Vec<_>>());
        checks.push(Check::at_least(format!("H={h} residual order in dt"), order, h / 2.0).with(format!("sup residuals {}", super::sci(&resid))));
    }
    Ok(checks)
}
