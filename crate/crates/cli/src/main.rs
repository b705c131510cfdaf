use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fracrds_cli::config::{parse_flat, ExperimentConfig, Kind};
use fracrds_cli::manifest::{write_atomic, RunManifest};
use fracrds_cli::run::{run, RunError};
use fracrds_cli::suites::{run_suite, suite_names};

/// Simulation and verification of SDEs driven by additive fractional noise.
#[derive(Parser)]
#[command(name = "fracrds", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Flat key = value config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; replaces `master_seed` and the first entry of `seeds`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; replaces `out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for independent replicates.
    #[arg(long, global = true, env = "FRACRDS_THREADS", default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Sample fBm paths, one CSV per seed.
    Fbm,
    /// Solve the flow for each seed.
    Flow,
    /// Estimate the top Lyapunov exponent.
    Lyapunov,
    /// Histogram estimate of the invariant density.
    Density,
    /// Transition density at t0 through the bridge representation.
    Bridge,
    /// λ̂₁, ball mass and bound across noise intensities.
    Sweep,
    /// Run a named verification suite.
    Verify {
        /// One of: acceptance, trivial, noise-identities, bridge-oracles, criterion-1 … criterion-12.
        suite: String,
    },
}

enum Failure {
    Usage(String),
    Numeric(String),
}

fn load(kind: Kind, common: &Common) -> Result<ExperimentConfig, Failure> {
    let mut map = match &common.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
            parse_flat(&text).map_err(|e| Failure::Usage(e.to_string()))?
        }
        None => Default::default(),
    };
    if let Some(s) = common.seed {
        map.insert("master_seed".into(), s.to_string());
        if let Some(list) = map.get("seeds").cloned() {
            let rest: Vec<&str> = list.split(',').skip(1).collect();
            map.insert("seeds".into(), std::iter::once(s.to_string()).chain(rest.iter().map(|r| r.trim().to_string())).collect::<Vec<_>>().join(","));
        }
    }
    if let Some(o) = &common.out {
        map.insert("out".into(), o.display().to_string());
    }
    ExperimentConfig::from_map(kind, &map).map_err(|e| Failure::Usage(e.to_string()))
}

fn report(m: &RunManifest, dir: &std::path::Path) {
    for c in &m.checks {
        println!("{} {}: {:.4e} (threshold {:.4e}) {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.value, c.threshold, c.detail);
    }
    println!("{} files written to {} in {:.1}s", m.files.len(), dir.display(), m.wall_seconds);
}

fn execute(cli: Cli) -> Result<bool, Failure> {
    let kind = match &cli.command {
        Command::Fbm => Kind::Fbm,
        Command::Flow => Kind::Flow,
        Command::Lyapunov => Kind::Lyapunov,
        Command::Density => Kind::Density,
        Command::Bridge => Kind::Bridge,
        Command::Sweep => Kind::Sweep,
        Command::Verify { suite } => return verify(suite, &cli.common),
    };
    let cfg = load(kind, &cli.common)?;
    let m = run(&cfg, cli.common.threads).map_err(|e| match e {
        RunError::Numeric(m) => Failure::Numeric(m),
        RunError::Io(e) => Failure::Usage(format!("{}: {e}", cfg.out.display())),
    })?;
    report(&m, &cfg.out);
    Ok(m.passed)
}

fn verify(suite: &str, common: &Common) -> Result<bool, Failure> {
    let seed = common.seed.unwrap_or(20_240_601);
    let r = run_suite(suite, seed).ok_or_else(|| Failure::Usage(format!("unknown suite '{suite}'; available: {}", suite_names().join(", "))))?;
    for c in &r.criteria {
        println!("{}", c.summary_line());
    }
    if let Some(dir) = &common.out {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("{}: {e}", dir.display())))?;
        let json = serde_json::to_vec_pretty(&r).expect("report serializes");
        write_atomic(&dir.join(format!("verify_{suite}.json")), &json).map_err(|e| Failure::Usage(e.to_string()))?;
    }
    Ok(r.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Numeric(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
