//! One-round progress of Slush from a fixed share, measured against the
//! closed-form `delta`.

use super::config::{ConfigMap, KAlpha};
use super::result::{p, ExperimentResult};
use super::stats::{mean, std_error};
use super::{master_seed, run_seed, seed_count};
use crate::adversary::{Adversary, AdversaryStrategy};
use crate::analytic::{curve, delta, ProgressQuery};
use crate::error::Result;
use crate::protocol::{ProtocolKind, ProtocolParams};
use crate::sampling::SamplingMode;
use crate::simulator::{run_round, NetworkState};

pub(super) const DEFAULTS: &[(&str, &str)] = &[
    ("seed", "1"),
    ("seeds", "200"),
    ("n", "10000"),
    ("pairs", "1:1,2:2,3:2,5:3,10:6,20:15"),
    ("p0", "0.5,0.6,0.75,0.9"),
    ("sampling", "all"),
    ("z_limit", "4"),
    ("curve_pairs", "1:1,3:2,5:3,7:4,9:5,11:6,20:11,20:13,20:15,20:17,20:20"),
    ("curve_step", "0.01"),
];

/// `Delta_1 / n` for each seed, starting from `ones` parties holding one.
pub(crate) fn one_round_progress(
    n: usize,
    ones: usize,
    params: &ProtocolParams,
    master: u64,
    seeds: usize,
) -> Result<Vec<f64>> {
    params.validate()?;
    let start = NetworkState::with_ones(params.kind, n, ones);
    let mut out = Vec::with_capacity(seeds);
    for i in 0..seeds {
        let mut net = start.clone();
        let mut adv = Adversary::new(AdversaryStrategy::NoAdversary, &net)?;
        let rec = run_round(&mut net, params, &mut adv, run_seed(master, i));
        out.push((rec.ones as f64 - ones as f64) / n as f64);
    }
    Ok(out)
}

pub(super) fn run(cfg: &ConfigMap) -> Result<ExperimentResult> {
    let master = master_seed(cfg)?;
    let seeds = seed_count(cfg)?;
    let n: usize = cfg.get("n")?;
    let pairs: Vec<KAlpha> = cfg.get_list("pairs")?;
    let shares: Vec<f64> = cfg.get_list("p0")?;
    let sampling: SamplingMode = cfg.get("sampling")?;
    let z_limit: f64 = cfg.get("z_limit")?;
    let curve_pairs: Vec<KAlpha> = cfg.get_list("curve_pairs")?;
    let step: f64 = cfg.get("curve_step")?;

    let mut res = ExperimentResult::new("delta-validation", master, cfg);
    let mut worst = 0.0f64;
    for &KAlpha { k, alpha } in &pairs {
        let params = ProtocolParams::new(ProtocolKind::Slush, k, alpha).with_sampling(sampling);
        for &p0 in &shares {
            let ones = (p0 * n as f64).round() as usize;
            // The realized share, which differs from p0 when p0 * n is fractional.
            let share = ones as f64 / n as f64;
            let analytic = delta(&ProgressQuery::new(k, alpha, share)?);
            let samples = one_round_progress(n, ones, &params, master, seeds)?;
            let (m, se) = (mean(&samples), std_error(&samples));
            let diff = m - analytic;
            let z = if se > 0.0 {
                diff / se
            } else if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            worst = worst.max(z.abs());
            let cell = [
                p("grid", "monte-carlo"),
                p("protocol", "slush"),
                p("n", n),
                p("k", k),
                p("alpha", alpha),
                p("p0", share),
                p("sampling", sampling),
            ];
            res.push(&cell, "analytic_delta", analytic, None);
            res.push(&cell, "mc_mean_delta", m, Some(se));
            res.push(&cell, "z_score", z, None);
        }
    }
    res.check(
        "monte-carlo-matches-delta",
        worst < z_limit,
        format!("max |z| = {worst:.3}, limit {z_limit}"),
    );

    for &KAlpha { k, alpha } in &curve_pairs {
        for (x, d) in curve(k, alpha, step)? {
            res.push(
                &[p("grid", "curve"), p("k", k), p("alpha", alpha), p("p0", x)],
                "delta",
                d,
                None,
            );
        }
    }
    Ok(res)
}
