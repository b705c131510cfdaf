//! Flat `key = value` experiment configuration.
//!
//! One assignment per line, `#` starts a comment, no sections or nesting.
//! Lists are comma separated; matrices separate rows with `;`.
//!
//! | key | meaning | default |
//! |---|---|---|
//! | `kind` | fbm, flow, lyapunov, density, bridge, sweep | subcommand |
//! | `drift` | zero, double_well, linear, rotational | double_well |
//! | `dim` | state dimension | 1 (2 for rotational) |
//! | `drift_matrix` | matrix A of the linear drift F(y) = Ay | |
//! | `h` | Hurst parameter | per kind |
//! | `sigma` | scalar noise intensity, σ = sigma·I | 1 |
//! | `sigma_matrix` | full σ, overrides `sigma` | |
//! | `sigmas` | sweep intensities ‖σ‖ | 0.5,1,2,5 |
//! | `t_total`, `dt`, `burn_in` | run horizon, step, discarded prefix | per kind |
//! | `t0` | bridge horizon | 0.25 |
//! | `seeds` | explicit seed list | |
//! | `seed_count`, `master_seed` | seeds master_seed, master_seed+1, … | 1, 1 |
//! | `x0` | initial state | zeros |
//! | `thin`, `blocks`, `probes`, `radius`, `bins` | estimator settings | per kind |
//! | `y_min`, `y_max`, `y_points` | bridge density grid (per axis) | -2, 2, 41 |
//! | `bridge_samples` | bridge replicates per grid point | 2000 |
//! | `truncation_tolerance` | tail-estimate tolerance of the noise operators | 0.1 |
//! | `out` | output directory | out |

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use nalgebra::DMatrix;

use fracrds::error::grid_index;

#[derive(Debug)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config key '{}': {}", self.key, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { key: key.into(), message: message.into() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Fbm,
    Flow,
    Lyapunov,
    Density,
    Bridge,
    Sweep,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Fbm => "fbm",
            Kind::Flow => "flow",
            Kind::Lyapunov => "lyapunov",
            Kind::Density => "density",
            Kind::Bridge => "bridge",
            Kind::Sweep => "sweep",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Kind::Fbm, Kind::Flow, Kind::Lyapunov, Kind::Density, Kind::Bridge, Kind::Sweep].into_iter().find(|k| k.name() == s)
    }

    fn defaults(self) -> &'static [(&'static str, &'static str)] {
        match self {
            Kind::Fbm => &[("h", "0.5"), ("t_total", "1"), ("dt", "0.00390625")],
            Kind::Flow => &[("h", "0.7"), ("t_total", "10"), ("dt", "0.001")],
            Kind::Lyapunov => &[("h", "0.7"), ("t_total", "220"), ("dt", "0.001"), ("burn_in", "20"), ("seed_count", "2")],
            Kind::Density => &[("h", "0.7"), ("t_total", "220"), ("dt", "0.001"), ("burn_in", "20"), ("thin", "10"), ("seed_count", "2")],
            Kind::Bridge => &[("h", "0.3"), ("t0", "0.25"), ("dt", "0.00390625"), ("x0", "0.2")],
            Kind::Sweep => {
                &[("h", "0.7"), ("t_total", "220"), ("dt", "0.001"), ("burn_in", "20"), ("thin", "10"), ("seed_count", "2"), ("radius", "2")]
            }
        }
    }
}

const KEYS: &[&str] = &[
    "kind",
    "drift",
    "dim",
    "drift_matrix",
    "h",
    "sigma",
    "sigma_matrix",
    "sigmas",
    "t_total",
    "dt",
    "burn_in",
    "t0",
    "seeds",
    "seed_count",
    "master_seed",
    "x0",
    "thin",
    "blocks",
    "probes",
    "radius",
    "bins",
    "y_min",
    "y_max",
    "y_points",
    "bridge_samples",
    "truncation_tolerance",
    "out",
];

/// Parses `key = value` lines; later assignments of the same key are errors.
pub fn parse_flat(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| err(line, format!("line {} is not of the form key = value", no + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(err(k, "unknown key"));
        }
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(err(k, "assigned twice"));
        }
    }
    Ok(map)
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub drift: String,
    pub dim: usize,
    pub drift_matrix: Option<DMatrix<f64>>,
    pub h: f64,
    pub sigma: DMatrix<f64>,
    pub sigmas: Vec<f64>,
    pub t_total: f64,
    pub dt: f64,
    pub burn_in: f64,
    pub t0: f64,
    pub seeds: Vec<u64>,
    pub x0: Vec<f64>,
    pub thin: usize,
    pub blocks: usize,
    pub probes: usize,
    pub radius: f64,
    pub bins: Option<usize>,
    pub y_min: f64,
    pub y_max: f64,
    pub y_points: usize,
    pub bridge_samples: usize,
    pub truncation_tolerance: f64,
    pub out: PathBuf,
    /// Every key with its effective value, for the manifest.
    pub echo: BTreeMap<String, String>,
}

fn num<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, ConfigError> {
    map.get(key).map(|v| v.parse::<T>().map_err(|_| err(key, format!("cannot parse '{v}'")))).transpose()
}

fn list(map: &BTreeMap<String, String>, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
    map.get(key)
        .map(|v| v.split(',').map(|x| x.trim().parse::<f64>().map_err(|_| err(key, format!("cannot parse '{x}'")))).collect())
        .transpose()
}

fn matrix(map: &BTreeMap<String, String>, key: &str) -> Result<Option<DMatrix<f64>>, ConfigError> {
    let Some(v) = map.get(key) else { return Ok(None) };
    let rows: Vec<Vec<f64>> = v
        .split(';')
        .map(|r| r.split(',').map(|x| x.trim().parse::<f64>().map_err(|_| err(key, format!("cannot parse '{x}'")))).collect())
        .collect::<Result<_, _>>()?;
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(err(key, "matrix must be square"));
    }
    Ok(Some(DMatrix::from_fn(n, n, |i, j| rows[i][j])))
}

fn positive(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(err(key, format!("must be positive, got {v}")))
    }
}

fn on_grid(key: &str, t: f64, dt: f64) -> Result<(), ConfigError> {
    grid_index(t, dt).map(|_| ()).map_err(|_| err(key, format!("{t} is not a multiple of dt = {dt}")))
}

impl ExperimentConfig {
    /// Builds and validates a config: kind defaults first, then `map`.
    pub fn from_map(kind: Kind, map: &BTreeMap<String, String>) -> Result<Self, ConfigError> {
        if let Some(k) = map.get("kind") {
            if Kind::parse(k) != Some(kind) {
                return Err(err("kind", format!("'{k}' does not match the subcommand '{}'", kind.name())));
            }
        }
        let mut m: BTreeMap<String, String> = kind.defaults().iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        m.extend(map.iter().map(|(k, v)| (k.clone(), v.clone())));
        m.insert("kind".into(), kind.name().into());

        let drift = m.get("drift").cloned().unwrap_or_else(|| if kind == Kind::Fbm { "zero".into() } else { "double_well".into() });
        let drift_matrix = matrix(&m, "drift_matrix")?;
        let default_dim = match (&drift_matrix, drift.as_str()) {
            (Some(a), _) => a.nrows(),
            (None, "rotational") => 2,
            _ => 1,
        };
        let dim = num(&m, "dim")?.unwrap_or(default_dim);
        if dim == 0 {
            return Err(err("dim", "must be at least 1"));
        }
        if drift_matrix.as_ref().is_some_and(|a| a.nrows() != dim) {
            return Err(err("drift_matrix", format!("expected a {dim}x{dim} matrix")));
        }
        let h: f64 = num(&m, "h")?.ok_or_else(|| err("h", "missing"))?;
        if !(h > 0.0 && h < 1.0) {
            return Err(err("h", format!("{h} outside (0, 1)")));
        }
        let sigma = match matrix(&m, "sigma_matrix")? {
            Some(s) if s.nrows() != dim => return Err(err("sigma_matrix", format!("expected a {dim}x{dim} matrix"))),
            Some(s) => s,
            None => DMatrix::identity(dim, dim) * positive("sigma", num(&m, "sigma")?.unwrap_or(1.0))?,
        };
        let sigmas = list(&m, "sigmas")?.unwrap_or_else(|| vec![0.5, 1.0, 2.0, 5.0]);
        for &s in &sigmas {
            positive("sigmas", s)?;
        }
        let dt = positive("dt", num(&m, "dt")?.ok_or_else(|| err("dt", "missing"))?)?;
        let t0 = positive("t0", num(&m, "t0")?.unwrap_or(0.25))?;
        let t_total = positive("t_total", num(&m, "t_total")?.unwrap_or(t0))?;
        if dt > t_total {
            return Err(err("dt", format!("dt = {dt} exceeds t_total = {t_total}")));
        }
        on_grid("t_total", t_total, dt)?;
        let burn_in: f64 = num(&m, "burn_in")?.unwrap_or(0.0);
        if !(burn_in >= 0.0 && burn_in < t_total) {
            return Err(err("burn_in", format!("must lie in [0, t_total), got {burn_in}")));
        }
        on_grid("burn_in", burn_in, dt)?;
        if kind == Kind::Bridge {
            if t0 > 1.0 {
                return Err(err("t0", "bridge horizon must not exceed 1"));
            }
            on_grid("t0", t0, dt)?;
        }
        let seeds: Vec<u64> = match m.get("seeds") {
            Some(v) => v.split(',').map(|x| x.trim().parse::<u64>().map_err(|_| err("seeds", format!("cannot parse '{x}'")))).collect::<Result<_, _>>()?,
            None => {
                let count: u64 = num(&m, "seed_count")?.unwrap_or(1);
                let master: u64 = num(&m, "master_seed")?.unwrap_or(1);
                (0..count).map(|i| master.wrapping_add(i)).collect()
            }
        };
        if seeds.is_empty() {
            return Err(err("seeds", "at least one seed is required"));
        }
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != seeds.len() {
            return Err(err("seeds", "seeds must be distinct"));
        }
        let x0 = list(&m, "x0")?.unwrap_or_else(|| vec![0.0; dim]);
        if x0.len() != dim {
            return Err(err("x0", format!("expected {dim} components")));
        }
        let y_min = num(&m, "y_min")?.unwrap_or(-2.0);
        let y_max = num(&m, "y_max")?.unwrap_or(2.0);
        if !(y_max > y_min) {
            return Err(err("y_max", "must exceed y_min"));
        }
        let y_points = num(&m, "y_points")?.unwrap_or(41);
        if y_points < 2 {
            return Err(err("y_points", "need at least two grid points"));
        }
        let mut cfg = Self {
            kind,
            drift,
            dim,
            drift_matrix,
            h,
            sigma,
            sigmas,
            t_total,
            dt,
            burn_in,
            t0,
            seeds,
            x0,
            thin: num(&m, "thin")?.unwrap_or(1).max(1),
            blocks: num(&m, "blocks")?.unwrap_or(20),
            probes: num(&m, "probes")?.unwrap_or(0),
            radius: positive("radius", num(&m, "radius")?.unwrap_or(2.0))?,
            bins: num(&m, "bins")?,
            y_min,
            y_max,
            y_points,
            bridge_samples: num(&m, "bridge_samples")?.unwrap_or(2000),
            truncation_tolerance: positive("truncation_tolerance", num(&m, "truncation_tolerance")?.unwrap_or(0.1))?,
            out: PathBuf::from(m.get("out").cloned().unwrap_or_else(|| "out".into())),
            echo: BTreeMap::new(),
        };
        cfg.echo = m;
        cfg.echo.insert("seeds".into(), cfg.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(","));
        Ok(cfg)
    }
}
