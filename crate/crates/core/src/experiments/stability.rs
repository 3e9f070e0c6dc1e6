//! Slush started `ceil(s sqrt n)` parties short of unanimity: how often does
//! the one-count dip below `15n/16` within `horizon` rounds?

use super::config::{AdversarySpec, ConfigMap};
use super::result::{p, ExperimentResult};
use super::stats::mean;
use super::{master_seed, run_seed, seed_count};
use crate::error::Result;
use crate::protocol::{ProtocolKind, ProtocolParams};
use crate::sampling::SamplingMode;
use crate::simulator::{self, NetworkState, RunOptions};

pub(super) const DEFAULTS: &[(&str, &str)] = &[
    ("seed", "1"),
    ("seeds", "100"),
    ("n", "16384"),
    ("k", "10"),
    ("alpha", "6"),
    ("s", "0,1"),
    ("horizon", "20"),
    ("adversaries", "none,flip-minority:sqrt"),
    ("floor_fraction", "0.9375"),
    ("sampling", "all"),
];

pub(super) fn run(cfg: &ConfigMap) -> Result<ExperimentResult> {
    let master = master_seed(cfg)?;
    let seeds = seed_count(cfg)?;
    let n: usize = cfg.get("n")?;
    let k: u32 = cfg.get("k")?;
    let alpha: u32 = cfg.get("alpha")?;
    let offsets: Vec<f64> = cfg.get_list("s")?;
    let horizon: u32 = cfg.get("horizon")?;
    let adversaries: Vec<AdversarySpec> = cfg.get_list("adversaries")?;
    let floor_fraction: f64 = cfg.get("floor_fraction")?;
    let sampling: SamplingMode = cfg.get("sampling")?;

    // Slush without a decision round: pure opinion dynamics.
    let params = ProtocolParams::new(ProtocolKind::Slush, k, alpha).with_sampling(sampling);
    let options = RunOptions::new(horizon.max(1));
    let floor = floor_fraction * n as f64;

    let mut res = ExperimentResult::new("stability", master, cfg);
    let mut clean = true;
    for &s in &offsets {
        let s0 = n.saturating_sub((s * (n as f64).sqrt()).ceil() as usize);
        let start = NetworkState::with_ones(ProtocolKind::Slush, n, s0);
        for adv in &adversaries {
            let strategy = adv.resolve(n)?;
            let mut violations = 0;
            let mut min_share = f64::INFINITY;
            let mut finals = Vec::with_capacity(seeds);
            for i in 0..seeds {
                let m = simulator::run(start.clone(), &params, strategy, run_seed(master, i), &options)?;
                let low = m.s_trace.iter().take(horizon as usize + 1).copied().min().unwrap_or(s0);
                violations += usize::from((low as f64) < floor);
                min_share = min_share.min(low as f64 / n as f64);
                finals.push(*m.s_trace.last().unwrap_or(&s0) as f64 / n as f64);
            }
            clean &= violations == 0;
            let cell = [
                p("protocol", "slush"),
                p("n", n),
                p("k", k),
                p("alpha", alpha),
                p("s", s),
                p("s0", s0),
                p("horizon", horizon),
                p("adversary", strategy),
            ];
            res.push(&cell, "violation_fraction", violations as f64 / seeds as f64, None);
            res.push(&cell, "min_share", min_share, None);
            res.push(&cell, "mean_final_share", mean(&finals), None);
        }
    }
    res.check(
        "no-dip-below-floor",
        clean,
        format!("one-count stayed at least {floor_fraction} n for {horizon} rounds in every run"),
    );
    Ok(res)
}
