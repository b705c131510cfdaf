use crate::path::PastPath;

/// Discrete lower bound of the weighted Hölder norm
/// sup |ω(t) − ω(s)| / (√(1+|t|+|s|)·|t−s|^{(1−H)/2}).
///
/// All grid pairs are used up to 2048 steps; longer paths use every pair at a
/// dyadic separation, which keeps the cost at O(n log n).
pub fn bnorm(omega: &PastPath, h: f64) -> f64 {
    let n = omega.steps();
    let dt = omega.dt();
    let e = 0.5 * (1.0 - h);
    let ratio = |i: usize, k: usize| -> f64 {
        let (a, b) = (omega.row(i), omega.row(k));
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        if num == 0.0 {
            return 0.0;
        }
        let ti = i as f64 * dt;
        let tk = k as f64 * dt;
        num / ((1.0 + ti + tk).sqrt() * (tk - ti).abs().powf(e))
    };
    let mut best: f64 = 0.0;
    if n <= 2048 {
        for i in 0..n {
            for k in i + 1..=n {
                best = best.max(ratio(i, k));
            }
        }
    } else {
        let mut sep = 1;
        while sep <= n {
            for i in 0..=n - sep {
                best = best.max(ratio(i, i + sep));
            }
            sep *= 2;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_path_half() {
        // |t−s|^{3/4}/√(1+|t|+|s|) is maximised at the full span: 1/√2
        let w = PastPath::from_fn(1.0 / 64.0, 1, 64, |s| vec![s]);
        let v = bnorm(&w, 0.5);
        assert!((v - 0.5f64.sqrt()).abs() < 1e-14, "{v}");
    }

    #[test]
    fn zero_and_homogeneity() {
        assert_eq!(bnorm(&PastPath::zeros(0.1, 2, 10), 0.3), 0.0);
        let w = PastPath::from_fn(0.1, 1, 50, |s| vec![(3.0 * s).sin()]);
        assert!((bnorm(&w.scaled(2.0), 0.3) - 2.0 * bnorm(&w, 0.3)).abs() < 1e-14);
    }
}
