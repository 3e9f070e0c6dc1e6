//! Slush from an even split: rounds until all but `ceil(sqrt n)` parties
//! agree, across network sizes and sample sizes.

use super::config::{AdversarySpec, ConfigMap};
use super::result::{p, ExperimentResult};
use super::stats::{linear_fit, mean, median, quantile, std_error};
use super::{get_auto, master_seed, run_seed, seed_count};
use crate::analytic::min_alpha;
use crate::error::Result;
use crate::protocol::{ProtocolKind, ProtocolParams};
use crate::sampling::SamplingMode;
use crate::simulator::{self, default_stability_threshold, NetworkState, RunOptions};

pub(super) const DEFAULTS: &[(&str, &str)] = &[
    ("seed", "1"),
    ("seeds", "50"),
    ("ns", "256,1024,4096,16384"),
    ("k", "10"),
    ("alpha", "auto"),
    ("adversaries", "none,flip-minority:sqrt"),
    ("p0", "0.5"),
    ("sampling", "all"),
    ("max_rounds", "1000"),
    ("stability_threshold", "auto"),
    ("bound_factor", "4"),
    ("sweep_n", "4096"),
    ("sweep_ks", "2,5,10,20,40"),
    ("sweep_adversary", "none"),
    ("sweep_noise", "1"),
    ("k_improvement_limit", "8"),
];

/// Stable rounds per seed; runs that never stabilize count as `max_rounds`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn stable_rounds(
    n: usize,
    k: u32,
    alpha: u32,
    p0: f64,
    adversary: &AdversarySpec,
    options: &RunOptions,
    sampling: SamplingMode,
    master: u64,
    seeds: usize,
) -> Result<(Vec<f64>, usize)> {
    let params = ProtocolParams::new(ProtocolKind::Slush, k, alpha).with_sampling(sampling);
    let strategy = adversary.resolve(n)?;
    let start = NetworkState::with_share(ProtocolKind::Slush, n, p0);
    let mut rounds = Vec::with_capacity(seeds);
    let mut unstable = 0;
    for i in 0..seeds {
        let m = simulator::run(start.clone(), &params, strategy, run_seed(master, i), options)?;
        match m.stable_round {
            Some(r) => rounds.push(f64::from(r)),
            None => {
                unstable += 1;
                rounds.push(f64::from(options.max_rounds));
            }
        }
    }
    Ok((rounds, unstable))
}

/// `log2 n / (3 log2(k + 1))`: rounds below which a 2/3 majority is unlikely.
pub fn lower_floor(n: usize, k: u32) -> f64 {
    (n as f64).log2() / (3.0 * f64::from(k + 1).log2())
}

pub(super) fn run(cfg: &ConfigMap) -> Result<ExperimentResult> {
    let master = master_seed(cfg)?;
    let seeds = seed_count(cfg)?;
    let ns: Vec<usize> = cfg.get_list("ns")?;
    let k: u32 = cfg.get("k")?;
    let alpha = get_auto(cfg, "alpha")?.unwrap_or(min_alpha(k));
    let adversaries: Vec<AdversarySpec> = cfg.get_list("adversaries")?;
    let p0: f64 = cfg.get("p0")?;
    let sampling: SamplingMode = cfg.get("sampling")?;
    let max_rounds: u32 = cfg.get("max_rounds")?;
    let threshold: Option<usize> = get_auto(cfg, "stability_threshold")?;
    let bound_factor: f64 = cfg.get("bound_factor")?;
    let sweep_n: usize = cfg.get("sweep_n")?;
    let sweep_ks: Vec<u32> = cfg.get_list("sweep_ks")?;
    let sweep_adv: AdversarySpec = cfg.get("sweep_adversary")?;
    let noise: f64 = cfg.get("sweep_noise")?;
    let k_limit: f64 = cfg.get("k_improvement_limit")?;

    let options = |n: usize| {
        RunOptions::new(max_rounds)
            .stop_when_stable()
            .with_stability_threshold(threshold.unwrap_or_else(|| default_stability_threshold(n)))
    };

    let mut res = ExperimentResult::new("convergence-scaling", master, cfg);
    let push_cell = |res: &mut ExperimentResult,
                         grid: &str,
                         n: usize,
                         k: u32,
                         alpha: u32,
                         adv: &AdversarySpec|
     -> Result<f64> {
        let (xs, unstable) =
            stable_rounds(n, k, alpha, p0, adv, &options(n), sampling, master, seeds)?;
        let cell = [
            p("grid", grid),
            p("protocol", "slush"),
            p("n", n),
            p("k", k),
            p("alpha", alpha),
            p("p0", p0),
            p("adversary_rule", adv),
            p("adversary", adv.resolve(n)?),
            p("threshold", options(n).stability_threshold.unwrap_or_default()),
        ];
        let med = median(&xs);
        res.push(&cell, "median_stable_round", med, None);
        res.push(&cell, "p95_stable_round", quantile(&xs, 0.95), None);
        res.push(&cell, "mean_stable_round", mean(&xs), Some(std_error(&xs)));
        res.push(&cell, "unstable_runs", unstable as f64, None);
        res.push(&cell, "lower_floor", lower_floor(n, k), None);
        Ok(med)
    };

    for adv in &adversaries {
        let mut medians = Vec::with_capacity(ns.len());
        for &n in &ns {
            medians.push(push_cell(&mut res, "n-sweep", n, k, alpha, adv)?);
        }
        let logs: Vec<f64> = ns.iter().map(|&n| (n as f64).log2()).collect();
        if ns.len() >= 2 {
            let fit = linear_fit(&logs, &medians);
            let cell = [p("grid", "n-sweep"), p("k", k), p("adversary_rule", adv)];
            res.push(&cell, "fit_slope_per_log2n", fit.slope, None);
            res.push(&cell, "fit_intercept", fit.intercept, None);
            res.push(&cell, "fit_r_squared", fit.r_squared, None);
        }
        let monotone = medians.windows(2).all(|w| w[0] <= w[1]);
        res.check(
            format!("median-nondecreasing-in-n[{adv}]"),
            monotone,
            format!("medians {medians:?}"),
        );
        let within = medians
            .iter()
            .zip(&logs)
            .all(|(m, l)| *m <= bound_factor * l);
        res.check(
            format!("median-within-{bound_factor}-log2n[{adv}]"),
            within,
            format!("medians {medians:?} vs log2 n {logs:?}"),
        );
    }

    let mut sweep = Vec::with_capacity(sweep_ks.len());
    for &sk in &sweep_ks {
        let m = push_cell(&mut res, "k-sweep", sweep_n, sk, min_alpha(sk), &sweep_adv)?;
        sweep.push((sk, m));
    }
    for w in sweep.windows(2) {
        res.push(
            &[p("grid", "k-sweep"), p("n", sweep_n), p("k_from", w[0].0), p("k_to", w[1].0)],
            "median_improvement",
            w[0].1 - w[1].1,
            None,
        );
    }
    if !sweep.is_empty() {
        let nonincreasing = sweep.windows(2).all(|w| w[1].1 <= w[0].1 + noise);
        res.check(
            "median-nonincreasing-in-k",
            nonincreasing,
            format!("medians {sweep:?}, noise allowance {noise}"),
        );
        let above_floor = sweep.iter().all(|&(sk, m)| m >= lower_floor(sweep_n, sk));
        res.check(
            "median-above-lower-floor",
            above_floor,
            "every k-sweep median is at least log2 n / (3 log2(k+1))",
        );
    }
    let at = |kk: u32| sweep.iter().find(|(sk, _)| *sk == kk).map(|&(_, m)| m);
    if let (Some(m5), Some(m40)) = (at(5), at(40)) {
        res.push(
            &[p("grid", "k-sweep"), p("n", sweep_n), p("k_from", 5), p("k_to", 40)],
            "median_improvement",
            m5 - m40,
            None,
        );
        res.check(
            "k5-to-k40-improvement-bounded",
            m5 - m40 <= k_limit,
            format!("improvement {} rounds, limit {k_limit}", m5 - m40),
        );
    }
    Ok(res)
}
