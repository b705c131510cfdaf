//! Named verification suites. Each acceptance criterion is a suite of its
//! own; `acceptance` runs all twelve in order.

use std::time::Instant;

use serde::Serialize;

mod bridge;
mod calculus;
mod dynamics;
mod noise;
mod statistics;
mod trivial;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), passed: value <= threshold, value, threshold, detail: String::new() }
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), passed: value >= threshold, value, threshold, detail: String::new() }
    }

    pub fn exact(name: impl Into<String>, value: f64, want: f64) -> Self {
        Self { name: name.into(), passed: value == want, value, threshold: want, detail: String::new() }
    }

    pub fn holds(name: impl Into<String>, passed: bool) -> Self {
        Self { name: name.into(), passed, value: f64::from(u8::from(passed)), threshold: 1.0, detail: String::new() }
    }

    pub fn with(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionReport {
    pub id: String,
    pub title: String,
    pub passed: bool,
    pub seconds: f64,
    pub checks: Vec<Check>,
}

impl CriterionReport {
    pub fn summary_line(&self) -> String {
        let failed: Vec<&str> = self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        let status = if self.passed { "PASS" } else { "FAIL" };
        let mut line = format!("{status} {} {} ({} checks, {:.1}s)", self.id, self.title, self.checks.len(), self.seconds);
        if !failed.is_empty() {
            line.push_str(&format!(" failing: {}", failed.join(", ")));
        }
        line
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub passed: bool,
    pub criteria: Vec<CriterionReport>,
}

type Body = fn(u64) -> fracrds::Result<Vec<Check>>;

const CRITERIA: [(&str, &str, Body); 12] = [
    ("criterion-1", "fBm covariance", noise::fbm_covariance),
    ("criterion-2", "noise algebra identities", noise::identities),
    ("criterion-3", "pathwise decomposition", noise::decomposition),
    ("criterion-4", "cocycle property", dynamics::cocycle),
    ("criterion-5", "tangent flow and Lyapunov oracle", dynamics::lyapunov_oracle),
    ("criterion-6", "sigma sweep on the double well", dynamics::sigma_sweep_double_well),
    ("criterion-7", "rescaling identity", statistics::rescaling),
    ("criterion-8", "fractional OU covariance", statistics::fou),
    ("criterion-9", "bridge mean path and endpoint order", bridge::bridge_sampler),
    ("criterion-10", "Girsanov transition density", bridge::girsanov_density),
    ("criterion-11", "local stability probe", dynamics::stability),
    ("criterion-12", "fractional calculus", calculus::fractional_calculus),
];

/// Suite names accepted by [`run_suite`].
pub fn suite_names() -> Vec<&'static str> {
    let mut v = vec!["acceptance", "trivial", "noise-identities", "bridge-oracles"];
    v.extend(CRITERIA.iter().map(|c| c.0));
    v
}

fn run_one(id: &str, title: &str, body: Body, seed: u64) -> CriterionReport {
    let start = Instant::now();
    let checks = match body(seed) {
        Ok(c) => c,
        Err(e) => vec![Check::holds("completed", false).with(e.to_string())],
    };
    let passed = !checks.is_empty() && checks.iter().all(|c| c.passed);
    CriterionReport { id: id.into(), title: title.into(), passed, seconds: start.elapsed().as_secs_f64(), checks }
}

/// Runs criterion `n` (1-based) with the given master seed.
pub fn criterion(n: usize, seed: u64) -> Option<CriterionReport> {
    let (id, title, body) = *CRITERIA.get(n.checked_sub(1)?)?;
    Some(run_one(id, title, body, seed))
}

pub fn run_suite(name: &str, seed: u64) -> Option<SuiteReport> {
    let criteria = match name {
        "acceptance" => (1..=CRITERIA.len()).filter_map(|n| criterion(n, seed)).collect(),
        "trivial" => vec![run_one("trivial", "exact degenerate cases", trivial::exact_cases, seed)],
        "noise-identities" => vec![
            run_one("noise-identities", "concatenation and shift identities", noise::identities, seed),
            run_one("cocycle", "cocycle property", dynamics::cocycle, seed),
        ],
        "bridge-oracles" => vec![run_one("bridge-oracles", "driftless and linear-drift densities", bridge::girsanov_density, seed)],
        other => {
            let n: usize = other.strip_prefix("criterion-")?.parse().ok()?;
            vec![criterion(n, seed)?]
        }
    };
    let passed = criteria.iter().all(|c: &CriterionReport| c.passed);
    Some(SuiteReport { suite: name.into(), seed, passed, criteria })
}

/// Largest absolute entry-wise difference; infinite when the shapes differ.
pub(crate) fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub(crate) fn max_abs(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

pub(crate) fn sci(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(" ")
}
