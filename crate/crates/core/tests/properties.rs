use proptest::prelude::*;

use fracrds::flow::{solve_flow, Drift};
use fracrds::fraccalc::{frac_integral, FracOrder};
use fracrds::noise::{concat_p, history_operator, mvn_operator, sample_fbm, shift_theta, shift_vartheta, NoiseModel, OperatorOptions};
use fracrds::{Path, PastPath};

const DT: f64 = 0.01;

// Integer-valued walks keep every difference exact, so index identities can
// be compared bit for bit.
fn walk(steps: &[i8], dim: usize) -> PastPath {
    let mut data = vec![0.0; dim];
    for (k, &s) in steps.iter().enumerate() {
        let prev = data[k * dim..(k + 1) * dim].to_vec();
        data.extend(prev.iter().enumerate().map(|(j, p)| p + f64::from(s) * (j as f64 + 1.0)));
    }
    PastPath::new(DT, dim, data).unwrap()
}

fn smooth(n: usize, dim: usize, a: f64, b: f64) -> PastPath {
    PastPath::from_fn(DT, dim, n, |s| (0..dim).map(|j| (a * s + j as f64).sin() * (-b * s).exp() - (j as f64).sin()).collect())
}

fn scale(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0)
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

const LOOSE: OperatorOptions = OperatorOptions { tolerance: f64::INFINITY, window: None };

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn vartheta_undoes_concatenation(minus in prop::collection::vec(-3i8..4, 20..60), plus in prop::collection::vec(-3i8..4, 20..60), q in 0usize..20, dim in 1usize..3) {
        let (wm, wp) = (walk(&minus, dim), walk(&plus, dim));
        let t = q as f64 * DT;
        let back = shift_vartheta(t, &concat_p(t, &wm, &wp).unwrap()).unwrap();
        prop_assert_eq!(back.data(), wm.data());
    }

    #[test]
    fn concatenation_composes(minus in prop::collection::vec(-3i8..4, 10..40), plus in prop::collection::vec(-3i8..4, 30..60), qs in 0usize..15, qt in 0usize..15) {
        let (wm, wp) = (walk(&minus, 2), walk(&plus, 2));
        let (s, t) = (qs as f64 * DT, qt as f64 * DT);
        let lhs = concat_p((qs + qt) as f64 * DT, &wm, &wp).unwrap();
        let rhs = concat_p(t, &concat_p(s, &wm, &wp).unwrap(), &shift_vartheta(s, &wp).unwrap()).unwrap();
        prop_assert_eq!(lhs.data(), rhs.data());
    }

    #[test]
    fn vartheta_is_a_semiflow(steps in prop::collection::vec(-3i8..4, 30..80), qs in 0usize..15, qt in 0usize..15) {
        let w = walk(&steps, 1);
        let lhs = shift_vartheta((qs + qt) as f64 * DT, &w).unwrap();
        let rhs = shift_vartheta(qt as f64 * DT, &shift_vartheta(qs as f64 * DT, &w).unwrap()).unwrap();
        prop_assert_eq!(lhs.data(), rhs.data());
    }

    #[test]
    fn theta_inverse_and_semigroup(minus in prop::collection::vec(-3i8..4, 30..60), plus in prop::collection::vec(-3i8..4, 30..60), qs in 0usize..12, qt in 0usize..12) {
        let (wm, wp) = (walk(&minus, 1), walk(&plus, 1));
        let t = qt as f64 * DT;
        let (a, b) = shift_theta(-t, (&wm, &wp)).unwrap();
        let (c, d) = shift_theta(t, (&a, &b)).unwrap();
        prop_assert_eq!(c.data(), wm.data());
        prop_assert_eq!(d.data(), wp.data());

        let s = qs as f64 * DT;
        let (e, f) = shift_theta(s + t, (&wm, &wp)).unwrap();
        let (g, k) = shift_theta(s, (&wm, &wp)).unwrap();
        let (g, k) = shift_theta(t, (&g, &k)).unwrap();
        prop_assert_eq!(e.data(), g.data());
        prop_assert_eq!(f.data(), k.data());
    }

    #[test]
    fn noise_operators_are_linear(h in 0.15f64..0.85, a in -2.0f64..2.0, b in -2.0f64..2.0, f1 in 0.5f64..6.0, f2 in 0.5f64..6.0) {
        let w1 = smooth(300, 2, f1, 0.3);
        let w2 = smooth(300, 2, f2, 0.1);
        let mix = w1.combine(a, &w2, b).unwrap();
        let op = |w: &PastPath| mvn_operator(w, h, &LOOSE).unwrap().value;
        let (o1, o2, om) = (op(&w1), op(&w2), op(&mix));
        let want = o1.combine(a, &o2, b).unwrap();
        prop_assert!(max_diff(om.data(), want.data()) <= 1e-12 * scale(o1.data()).max(scale(o2.data())) * (a.abs() + b.abs() + 1.0));

        let hist = |w: &PastPath| history_operator(w, h, 1.0, DT, &LOOSE).unwrap().value;
        let (p1, p2, pm) = (hist(&w1), hist(&w2), hist(&mix));
        let want: Vec<f64> = p1.data().iter().zip(p2.data()).map(|(x, y)| a * x + b * y).collect();
        prop_assert!(max_diff(pm.data(), &want) <= 1e-12 * scale(p1.data()).max(scale(p2.data())) * (a.abs() + b.abs() + 1.0));
    }

    #[test]
    fn frac_integral_is_linear_and_positive(alpha in 0.05f64..0.95, a in -3.0f64..3.0, vals in prop::collection::vec(0.0f64..5.0, 16..200)) {
        let n = vals.len() - 1;
        let f = Path::new(DT, 1, vals.clone()).unwrap();
        let g = Path::from_fn(DT, 1, n, |t| vec![(3.0 * t).cos()]);
        let order = FracOrder::new(alpha).unwrap();
        let i_f = frac_integral(order, &f);
        prop_assert!(i_f.data().iter().all(|&v| v >= 0.0));

        let mix = Path::new(DT, 1, f.data().iter().zip(g.data()).map(|(x, y)| a * x + y).collect()).unwrap();
        let i_g = frac_integral(order, &g);
        let want: Vec<f64> = i_f.data().iter().zip(i_g.data()).map(|(x, y)| a * x + y).collect();
        prop_assert!(max_diff(frac_integral(order, &mix).data(), &want) <= 1e-13 * (a.abs() + 1.0) * scale(i_f.data()).max(scale(i_g.data())));
    }

    #[test]
    fn double_well_flow_is_odd(seed in 0u64..1000, x0 in -2.0f64..2.0, h in 0.2f64..0.8) {
        let model = NoiseModel::scalar(h, 1.5, 1).unwrap();
        let b = sample_fbm(&model, 1.0, 1e-3, seed).unwrap();
        let neg = Path::new(b.dt(), 1, b.data().iter().map(|v| -v).collect()).unwrap();
        let drift = Drift::double_well(1);
        let up = solve_flow(&drift, &model, &[x0], &b, 1e-3).unwrap();
        let down = solve_flow(&drift, &model, &[-x0], &neg, 1e-3).unwrap();
        prop_assert!(up.path.data().iter().zip(down.path.data()).all(|(u, d)| *u == -*d));
    }

    #[test]
    fn scalar_flow_preserves_order(seed in 0u64..1000, x1 in -3.0f64..3.0, gap in 1e-3f64..2.0, h in 0.2f64..0.8) {
        let model = NoiseModel::scalar(h, 1.0, 1).unwrap();
        let b = sample_fbm(&model, 2.0, 1e-3, seed).unwrap();
        let drift = Drift::double_well(1);
        let lo = solve_flow(&drift, &model, &[x1], &b, 1e-3).unwrap();
        let hi = solve_flow(&drift, &model, &[x1 + gap], &b, 1e-3).unwrap();
        prop_assert!(lo.path.data().iter().zip(hi.path.data()).all(|(a, c)| a < c));
    }

    #[test]
    fn restart_matches_prefix(seed in 0u64..1000, k in 1usize..1000) {
        let model = NoiseModel::scalar(0.3, 1.0, 2).unwrap();
        let b = sample_fbm(&model, 1.0, 1e-3, seed).unwrap();
        let drift = Drift::rotational();
        let full = solve_flow(&drift, &model, &[0.5, -0.2], &b, 1e-3).unwrap();
        let head = solve_flow(&drift, &model, &[0.5, -0.2], &b.truncate(k), 1e-3).unwrap();
        let prefix = full.path.truncate(k);
        prop_assert_eq!(head.path.data(), prefix.data());
    }
}

#[test]
fn fbm_sampling_is_reproducible() {
    for h in [0.3, 0.5, 0.7] {
        let model = NoiseModel::scalar(h, 1.0, 2).unwrap();
        let a = sample_fbm(&model, 5.0, 1e-3, 42).unwrap();
        let b = sample_fbm(&model, 5.0, 1e-3, 42).unwrap();
        let c = sample_fbm(&model, 5.0, 1e-3, 43).unwrap();
        assert_eq!(a.data(), b.data());
        assert_ne!(a.data(), c.data());
    }
}

#[test]
fn semigroup_error_shrinks_under_refinement() {
    let (a, b) = (FracOrder::new(0.3).unwrap(), FracOrder::new(0.4).unwrap());
    let ab = FracOrder::new(0.7).unwrap();
    let mut errs = Vec::new();
    for n in [64, 128, 256, 512, 1024] {
        let f = Path::from_fn(1.0 / n as f64, 1, n, |t| vec![(2.0 * t).sin() + t * t]);
        let twice = frac_integral(a, &frac_integral(b, &f));
        let once = frac_integral(ab, &f);
        errs.push(max_diff(twice.data(), once.data()));
    }
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    assert!(errs[errs.len() - 1] < 1e-3, "{errs:?}");
}
