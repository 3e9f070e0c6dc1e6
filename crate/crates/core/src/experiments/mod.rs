//! Named, reproducible experiment suites.
//!
//! Each suite is a pure function of its [`ConfigMap`]. Run `i` of every cell
//! uses the seed `derive_seed(master, [i])`, so cells that differ only in
//! one parameter are compared on matched seeds.

pub mod config;
pub mod result;
pub mod stats;

mod blizzard;
mod convergence;
mod delay;
mod delta;
mod snowball;
mod stability;

use std::time::Instant;

pub use config::{AdversarySpec, Budget, ConfigMap, KAlpha};
pub use result::{Check, ExperimentResult, Row};

use crate::error::{invalid, Error, Result};
use crate::sampling::derive_seed;

type RunFn = fn(&ConfigMap) -> Result<ExperimentResult>;

pub struct ExperimentSpec {
    pub name: &'static str,
    pub summary: &'static str,
    pub defaults: &'static [(&'static str, &'static str)],
    run: RunFn,
}

const REGISTRY: &[ExperimentSpec] = &[
    ExperimentSpec {
        name: "delta-validation",
        summary: "one-round Monte Carlo progress against the closed-form delta, plus delta curves",
        defaults: delta::DEFAULTS,
        run: delta::run,
    },
    ExperimentSpec {
        name: "convergence-scaling",
        summary: "Slush rounds to stable consensus across n and k",
        defaults: convergence::DEFAULTS,
        run: convergence::run,
    },
    ExperimentSpec {
        name: "snowflake-delay",
        summary: "decision latency under a split-group adversary as beta grows",
        defaults: delay::DEFAULTS,
        run: delay::run,
    },
    ExperimentSpec {
        name: "blizzard",
        summary: "Blizzard decision rate, agreement and latency under adversaries",
        defaults: blizzard::DEFAULTS,
        run: blizzard::run,
    },
    ExperimentSpec {
        name: "stability",
        summary: "whether a near-unanimous Slush network stays above 15n/16",
        defaults: stability::DEFAULTS,
        run: stability::run,
    },
    ExperimentSpec {
        name: "snowball-vs-slush",
        summary: "paired per-round progress of Snowball against Slush",
        defaults: snowball::DEFAULTS,
        run: snowball::run,
    },
];

pub fn registry() -> &'static [ExperimentSpec] {
    REGISTRY
}

pub fn find(name: &str) -> Result<&'static ExperimentSpec> {
    REGISTRY
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::UnknownExperiment(name.to_owned()))
}

pub fn default_config(name: &str) -> Result<ConfigMap> {
    Ok(ConfigMap::with_defaults(find(name)?.defaults))
}

/// Runs a suite and stamps its wall time.
pub fn run_experiment(name: &str, config: &ConfigMap) -> Result<ExperimentResult> {
    let spec = find(name)?;
    let start = Instant::now();
    let mut result = (spec.run)(config)?;
    result.wall_time = start.elapsed();
    Ok(result)
}

/// Seed of run `index` within every cell.
pub fn run_seed(master: u64, index: usize) -> u64 {
    derive_seed(master, &[index as u64])
}

fn master_seed(cfg: &ConfigMap) -> Result<u64> {
    cfg.get("seed")
}

fn seed_count(cfg: &ConfigMap) -> Result<usize> {
    let s: usize = cfg.get("seeds")?;
    if s == 0 {
        return Err(invalid("seeds must be at least 1"));
    }
    Ok(s)
}

/// Reads an integer key that may be `auto`.
pub(crate) fn get_auto<T>(cfg: &ConfigMap, key: &str) -> Result<Option<T>>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    if cfg.get_str(key)? == "auto" {
        Ok(None)
    } else {
        cfg.get(key).map(Some)
    }
}
