//! Blizzard with `tau = 2 T_Slush`: does every non-influenced party decide
//! within `7 T_Slush` rounds, and do all decisions agree?

use super::config::{AdversarySpec, ConfigMap};
use super::result::{p, ExperimentResult};
use super::stats::median;
use super::{get_auto, master_seed, run_seed, seed_count};
use crate::error::Result;
use crate::protocol::{t_slush, Opinion, ProtocolKind, ProtocolParams};
use crate::sampling::SamplingMode;
use crate::simulator::{self, NetworkState, RunOptions};

pub(super) const DEFAULTS: &[(&str, &str)] = &[
    ("seed", "1"),
    ("seeds", "100"),
    ("n", "1024"),
    ("k", "10"),
    ("alpha", "6"),
    ("p0", "0.5"),
    ("betas", "16,32"),
    ("adversaries", "none,flip-minority:32,split-groups:40"),
    ("c1", "4"),
    ("tau", "auto"),
    ("max_rounds", "auto"),
    ("sampling", "all"),
    ("latency_slack", "0"),
];

struct CellSummary {
    all_decided: usize,
    within_bound: usize,
    agreeing: usize,
    max_round: u32,
    /// Per run, the last decision round among non-influenced parties.
    finish: Vec<f64>,
}

fn run_cell(
    params: &ProtocolParams,
    start: &NetworkState,
    adversary: &AdversarySpec,
    bound: u32,
    options: &RunOptions,
    master: u64,
    seeds: usize,
) -> Result<CellSummary> {
    let strategy = adversary.resolve(start.n())?;
    let mut s = CellSummary {
        all_decided: 0,
        within_bound: 0,
        agreeing: 0,
        max_round: 0,
        finish: Vec::with_capacity(seeds),
    };
    for i in 0..seeds {
        let m = simulator::run(start.clone(), params, strategy, run_seed(master, i), options)?;
        let last = m.honest_decision_rounds().flatten().max().unwrap_or(0);
        s.all_decided += usize::from(m.terminated);
        s.within_bound += usize::from(m.terminated && last <= bound);
        s.agreeing += usize::from(m.agreement);
        s.max_round = s.max_round.max(m.max_decision_round().unwrap_or(0));
        s.finish.push(f64::from(last));
    }
    Ok(s)
}

pub(super) fn run(cfg: &ConfigMap) -> Result<ExperimentResult> {
    let master = master_seed(cfg)?;
    let seeds = seed_count(cfg)?;
    let n: usize = cfg.get("n")?;
    let k: u32 = cfg.get("k")?;
    let alpha: u32 = cfg.get("alpha")?;
    let p0: f64 = cfg.get("p0")?;
    let betas: Vec<u32> = cfg.get_list("betas")?;
    let adversaries: Vec<AdversarySpec> = cfg.get_list("adversaries")?;
    let c1: f64 = cfg.get("c1")?;
    let tau_override: Option<u32> = get_auto(cfg, "tau")?;
    let max_override: Option<u32> = get_auto(cfg, "max_rounds")?;
    let sampling: SamplingMode = cfg.get("sampling")?;
    let slack: f64 = cfg.get("latency_slack")?;

    let mut res = ExperimentResult::new("blizzard", master, cfg);
    let split = NetworkState::with_share(ProtocolKind::Blizzard, n, p0);
    let unanimous = NetworkState::with_ones(ProtocolKind::Blizzard, n, n);
    let total = seeds as f64;
    // Per adversary, (beta, median finish round) in config order.
    let mut latency: Vec<Vec<(u32, f64)>> = vec![Vec::new(); adversaries.len()];
    let mut all_ok = true;
    let mut valid_ok = true;

    for &beta in &betas {
        let ts = t_slush(n, beta, c1);
        let tau = tau_override.unwrap_or(2 * ts);
        let bound = 7 * ts;
        let options = RunOptions::new(max_override.unwrap_or(10 * ts));
        let params = ProtocolParams::new(ProtocolKind::Blizzard, k, alpha)
            .with_beta(beta)
            .with_tau(tau)
            .with_sampling(sampling);
        params.validate()?;
        for (ai, adv) in adversaries.iter().enumerate() {
            let s = run_cell(&params, &split, adv, bound, &options, master, seeds)?;
            let cell = [
                p("protocol", "blizzard"),
                p("n", n),
                p("k", k),
                p("alpha", alpha),
                p("p0", p0),
                p("beta", beta),
                p("t_slush", ts),
                p("tau", tau),
                p("bound", bound),
                p("adversary", adv.resolve(n)?),
            ];
            let med = median(&s.finish);
            res.push(&cell, "all_decided_fraction", s.all_decided as f64 / total, None);
            res.push(&cell, "decided_within_bound_fraction", s.within_bound as f64 / total, None);
            res.push(&cell, "agreement_rate", s.agreeing as f64 / total, None);
            res.push(&cell, "max_decision_round", f64::from(s.max_round), None);
            res.push(&cell, "median_finish_round", med, None);
            all_ok &= s.within_bound == seeds && s.agreeing == seeds;
            latency[ai].push((beta, med));
        }

        // Validity: everyone proposes one, nobody interferes.
        let none: AdversarySpec = "none".parse()?;
        let mut valid = 0;
        for i in 0..seeds {
            let m = simulator::run(
                unanimous.clone(),
                &params,
                none.resolve(n)?,
                run_seed(master, i),
                &options,
            )?;
            let ok = m.terminated && m.decided_values.iter().all(|v| *v == Some(Opinion::One));
            valid += usize::from(ok);
        }
        valid_ok &= valid == seeds;
        res.push(
            &[
                p("protocol", "blizzard"),
                p("n", n),
                p("k", k),
                p("alpha", alpha),
                p("p0", 1.0),
                p("beta", beta),
                p("tau", tau),
                p("adversary", "none"),
            ],
            "all_decide_one_fraction",
            valid as f64 / total,
            None,
        );
    }

    res.check(
        "all-decided-within-7-t-slush-and-agreeing",
        all_ok,
        "every run of every cell terminated by 7 T_Slush with one decided value",
    );
    res.check("validity", valid_ok, "unanimous one proposals always decide one");
    for (adv, series) in adversaries.iter().zip(&latency) {
        for w in series.windows(2) {
            let ((b1, l1), (b2, l2)) = (w[0], w[1]);
            let allowed = f64::from(b2) / f64::from(b1) * l1 + slack;
            res.check(
                format!("latency-at-most-linear-in-beta[{adv}, {b1}->{b2}]"),
                l2 <= allowed,
                format!("median finish {l1} -> {l2}, allowed {allowed}"),
            );
        }
    }
    Ok(res)
}
