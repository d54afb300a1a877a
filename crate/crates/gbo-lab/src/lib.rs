//! Experiment runner behind the `gbo-lab` binary.
//!
//! A run is a pure function of its [`RunConfig`]: [`run`] computes an
//! [`Outcome`] in memory and [`execute`] persists it with a manifest.

pub mod commands;
pub mod config;
pub mod examples;
pub mod output;

use std::path::{Path, PathBuf};

use anyhow::Result;

pub use config::{RunConfig, Verb};
pub use output::{Check, Outcome, RunManifest};

/// Compute a run on a pool of `jobs` threads (0 means one per core).
pub fn run(config: &RunConfig, jobs: usize) -> Result<Outcome> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    pool.install(|| commands::dispatch(config))
}

/// Run and write outputs, summary and manifest under `root/<name>/`.
pub fn execute(config: &RunConfig, root: &Path, jobs: usize) -> Result<(RunManifest, PathBuf)> {
    let started = output::timestamp();
    let outcome = run(config, jobs)?;
    let threads = if jobs == 0 {
        rayon::current_num_threads()
    } else {
        jobs
    };
    output::write_run(root, config, &outcome, started, threads)
}
