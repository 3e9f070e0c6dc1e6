//! Paired one-round progress of Snowball and Slush from the same state.
//!
//! A Snowball network is burned in for a few rounds so confidences differ
//! from zero. At every measured round the current opinions are also loaded
//! into a fresh Slush network, and both take one step with the same seed and
//! round index, hence the same samples. Progress is signed toward the
//! start-of-round majority. Decisions are disabled throughout.

use super::config::ConfigMap;
use super::result::{p, ExperimentResult};
use super::stats::{mean, median, std_error};
use super::{master_seed, run_seed, seed_count};
use crate::adversary::{Adversary, AdversaryStrategy};
use crate::error::Result;
use crate::protocol::{ProtocolKind, ProtocolParams};
use crate::sampling::SamplingMode;
use crate::simulator::{self, run_round, NetworkState, RunOptions};

pub(super) const DEFAULTS: &[(&str, &str)] = &[
    ("seed", "1"),
    ("seeds", "200"),
    ("n", "4096"),
    ("k", "10"),
    ("alpha", "6"),
    ("p0", "0.6,0.75"),
    ("burn_in", "3"),
    ("measured_rounds", "5"),
    ("se_factor", "3"),
    ("stable_max_rounds", "500"),
    ("sampling", "all"),
];

/// One step of `params.kind` from `net`, returning `(next, S_after - S_before)`.
fn step(net: &NetworkState, params: &ProtocolParams, seed: u64) -> Result<(NetworkState, i64)> {
    let mut next = net.clone();
    let mut adv = Adversary::new(AdversaryStrategy::NoAdversary, &next)?;
    let before = net.ones() as i64;
    let rec = run_round(&mut next, params, &mut adv, seed);
    Ok((next, rec.ones as i64 - before))
}

/// The same opinions and round index under fresh Slush state.
pub(crate) fn as_slush(net: &NetworkState) -> NetworkState {
    let mut s = NetworkState::from_opinions(ProtocolKind::Slush, net.opinions());
    s.round = net.round;
    s
}

pub(super) fn run(cfg: &ConfigMap) -> Result<ExperimentResult> {
    let master = master_seed(cfg)?;
    let seeds = seed_count(cfg)?;
    let n: usize = cfg.get("n")?;
    let k: u32 = cfg.get("k")?;
    let alpha: u32 = cfg.get("alpha")?;
    let shares: Vec<f64> = cfg.get_list("p0")?;
    let burn_in: u32 = cfg.get("burn_in")?;
    let measured: u32 = cfg.get("measured_rounds")?;
    let se_factor: f64 = cfg.get("se_factor")?;
    let stable_max: u32 = cfg.get("stable_max_rounds")?;
    let sampling: SamplingMode = cfg.get("sampling")?;

    let ball = ProtocolParams::new(ProtocolKind::Snowball, k, alpha).with_sampling(sampling);
    let slush = ProtocolParams::new(ProtocolKind::Slush, k, alpha).with_sampling(sampling);
    ball.validate()?;

    let mut res = ExperimentResult::new("snowball-vs-slush", master, cfg);
    let mut ordered = true;
    let mut identical = true;
    let mut slower = true;
    for &p0 in &shares {
        let fresh = NetworkState::with_share(ProtocolKind::Snowball, n, p0);
        let rounds = measured as usize;
        let mut d_ball = vec![Vec::with_capacity(seeds); rounds];
        let mut d_slush = vec![Vec::with_capacity(seeds); rounds];
        let mut mismatched_runs = 0;
        for i in 0..seeds {
            let seed = run_seed(master, i);
            let (mut net, _) = step(&fresh, &ball, seed)?;
            let (first_slush, _) = step(&as_slush(&fresh), &slush, seed)?;
            mismatched_runs += usize::from(net.opinions() != first_slush.opinions());
            for _ in 1..burn_in {
                net = step(&net, &ball, seed)?.0;
            }
            for r in 0..rounds {
                let sign = if 2 * net.ones() >= n { 1.0 } else { -1.0 };
                let (_, ds) = step(&as_slush(&net), &slush, seed)?;
                let (after_ball, db) = step(&net, &ball, seed)?;
                d_ball[r].push(sign * db as f64);
                d_slush[r].push(sign * ds as f64);
                net = after_ball;
            }
        }
        identical &= mismatched_runs == 0;
        res.push(
            &[p("n", n), p("k", k), p("alpha", alpha), p("p0", p0), p("round", 1)],
            "round1_mismatched_runs",
            mismatched_runs as f64,
            None,
        );
        for r in 0..rounds {
            let round = burn_in.max(1) + 1 + r as u32;
            let diffs: Vec<f64> = d_ball[r].iter().zip(&d_slush[r]).map(|(b, s)| b - s).collect();
            let (md, se) = (mean(&diffs), std_error(&diffs));
            ordered &= md <= se_factor * se;
            let cell = [p("n", n), p("k", k), p("alpha", alpha), p("p0", p0), p("round", round)];
            res.push(&cell, "mean_progress_snowball", mean(&d_ball[r]), Some(std_error(&d_ball[r])));
            res.push(&cell, "mean_progress_slush", mean(&d_slush[r]), Some(std_error(&d_slush[r])));
            res.push(&cell, "mean_paired_difference", md, Some(se));
        }

        let options = RunOptions::new(stable_max).stop_when_stable();
        let to_stable = |params: &ProtocolParams| -> Result<f64> {
            let start = NetworkState::with_share(params.kind, n, p0);
            let mut xs = Vec::with_capacity(seeds);
            for i in 0..seeds {
                let m = simulator::run(
                    start.clone(),
                    params,
                    AdversaryStrategy::NoAdversary,
                    run_seed(master, i),
                    &options,
                )?;
                xs.push(f64::from(m.stable_round.unwrap_or(stable_max)));
            }
            Ok(median(&xs))
        };
        let m_ball = to_stable(&ball)?;
        let m_slush = to_stable(&slush)?;
        slower &= m_ball >= m_slush;
        let cell = [p("n", n), p("k", k), p("alpha", alpha), p("p0", p0)];
        res.push(&cell, "median_rounds_to_stable_snowball", m_ball, None);
        res.push(&cell, "median_rounds_to_stable_slush", m_slush, None);
    }

    res.check(
        "snowball-progress-at-most-slush",
        ordered,
        format!("mean paired difference <= {se_factor} SE in every measured round"),
    );
    res.check(
        "fresh-round-one-identical",
        identical,
        "with zero confidences Snowball and Slush make the same moves",
    );
    res.check(
        "snowball-not-faster-to-stable",
        slower,
        "median rounds to stable: Snowball >= Slush",
    );
    Ok(res)
}
