//! Orchestration around the `fracrds` library: flat key-value experiment
//! configs, run manifests with content hashes, and the named verification
//! suites behind `fracrds verify`.

pub mod config;
pub mod manifest;
pub mod run;
pub mod suites;
