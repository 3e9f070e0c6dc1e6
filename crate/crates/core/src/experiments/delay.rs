//! Decision latency of Snowflake (or Snowball) when a split-group adversary
//! pins half its parties to each opinion, starting from unanimity.
//!
//! Latency is pooled over every non-influenced party of every run. A party
//! still undecided at `max_rounds` contributes `max_rounds`, so medians are
//! lower bounds once more than half the pool is censored.

use super::config::ConfigMap;
use super::result::{p, ExperimentResult};
use super::stats::{linear_fit, mean, median, std_error};
use super::{master_seed, run_seed, seed_count};
use crate::adversary::AdversaryStrategy;
use crate::error::{invalid, Result};
use crate::protocol::{ProtocolKind, ProtocolParams};
use crate::sampling::SamplingMode;
use crate::simulator::{self, NetworkState, RunOptions};

pub(super) const DEFAULTS: &[(&str, &str)] = &[
    ("seed", "1"),
    ("seeds", "50"),
    ("protocol", "snowflake"),
    ("n", "100"),
    ("k", "2"),
    ("alpha", "2"),
    ("budget", "40"),
    ("betas", "10,20,40,60"),
    ("max_rounds", "1000000"),
    ("sampling", "all"),
    ("r2_min", "0.9"),
    ("ratio_min", "5"),
    ("control_seeds", "5"),
];

pub struct LatencySample {
    /// One entry per non-influenced party per run.
    pub latencies: Vec<f64>,
    pub censored_parties: usize,
    pub censored_runs: usize,
}

pub fn pooled_latency(
    params: &ProtocolParams,
    n: usize,
    strategy: AdversaryStrategy,
    max_rounds: u32,
    master: u64,
    seeds: usize,
) -> Result<LatencySample> {
    let start = NetworkState::with_ones(params.kind, n, n);
    let options = RunOptions::new(max_rounds);
    let mut sample = LatencySample {
        latencies: Vec::new(),
        censored_parties: 0,
        censored_runs: 0,
    };
    for i in 0..seeds {
        let m = simulator::run(start.clone(), params, strategy, run_seed(master, i), &options)?;
        sample.censored_runs += usize::from(!m.terminated);
        for r in m.honest_decision_rounds() {
            match r {
                Some(r) => sample.latencies.push(f64::from(r)),
                None => {
                    sample.censored_parties += 1;
                    sample.latencies.push(f64::from(max_rounds));
                }
            }
        }
    }
    Ok(sample)
}

pub(super) fn run(cfg: &ConfigMap) -> Result<ExperimentResult> {
    let master = master_seed(cfg)?;
    let seeds = seed_count(cfg)?;
    let kind: ProtocolKind = cfg.get("protocol")?;
    if !matches!(kind, ProtocolKind::Snowflake | ProtocolKind::Snowball) {
        return Err(invalid("snowflake-delay supports snowflake and snowball"));
    }
    let n: usize = cfg.get("n")?;
    let k: u32 = cfg.get("k")?;
    let alpha: u32 = cfg.get("alpha")?;
    let budget: usize = cfg.get("budget")?;
    let betas: Vec<u32> = cfg.get_list("betas")?;
    let max_rounds: u32 = cfg.get("max_rounds")?;
    let sampling: SamplingMode = cfg.get("sampling")?;
    let r2_min: f64 = cfg.get("r2_min")?;
    let ratio_min: f64 = cfg.get("ratio_min")?;
    let control_seeds: usize = cfg.get("control_seeds")?;

    let attack = AdversaryStrategy::SplitGroups { budget };
    let mut res = ExperimentResult::new("snowflake-delay", master, cfg);
    let mut medians = Vec::with_capacity(betas.len());
    let mut floor_ok = true;
    let mut control_ok = true;
    for &beta in &betas {
        let params = ProtocolParams::new(kind, k, alpha)
            .with_beta(beta)
            .with_sampling(sampling);
        let s = pooled_latency(&params, n, attack, max_rounds, master, seeds)?;
        let cell = [
            p("protocol", kind),
            p("n", n),
            p("k", k),
            p("alpha", alpha),
            p("beta", beta),
            p("adversary", attack),
            p("max_rounds", max_rounds),
        ];
        let med = median(&s.latencies);
        medians.push(med);
        floor_ok &= med >= f64::from(beta);
        res.push(&cell, "median_latency", med, None);
        res.push(&cell, "mean_latency", mean(&s.latencies), Some(std_error(&s.latencies)));
        res.push(&cell, "censored_parties", s.censored_parties as f64, None);
        res.push(&cell, "censored_runs", s.censored_runs as f64, None);

        let control = pooled_latency(
            &params,
            n,
            AdversaryStrategy::NoAdversary,
            max_rounds,
            master,
            control_seeds.max(1),
        )?;
        let lo = control.latencies.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = control.latencies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        control_ok &= lo == f64::from(beta) && hi == f64::from(beta);
        let ccell = [
            p("protocol", kind),
            p("n", n),
            p("k", k),
            p("alpha", alpha),
            p("beta", beta),
            p("adversary", AdversaryStrategy::NoAdversary),
            p("max_rounds", max_rounds),
        ];
        res.push(&ccell, "control_min_latency", lo, None);
        res.push(&ccell, "control_max_latency", hi, None);
    }

    let xs: Vec<f64> = betas.iter().map(|&b| f64::from(b)).collect();
    let logs: Vec<f64> = medians.iter().map(|m| m.ln()).collect();
    let cell = [p("protocol", kind), p("n", n), p("adversary", attack)];
    if betas.len() >= 2 {
        let fit = linear_fit(&xs, &logs);
        res.push(&cell, "log_median_slope", fit.slope, None);
        res.push(&cell, "log_median_r_squared", fit.r_squared, None);
        res.check(
            "log-latency-grows-linearly-in-beta",
            fit.slope > 0.0 && fit.r_squared > r2_min,
            format!("slope {:.4}, R^2 {:.4}, required > {r2_min}", fit.slope, fit.r_squared),
        );
    }
    if let (Some(lo_i), Some(hi_i)) = (argmin(&betas), argmax(&betas)) {
        let ratio = medians[hi_i] / medians[lo_i];
        res.push(&cell, "latency_ratio_max_min_beta", ratio, None);
        res.check(
            "latency-ratio",
            ratio > ratio_min,
            format!(
                "median(beta={}) / median(beta={}) = {ratio:.2}, required > {ratio_min}",
                betas[hi_i], betas[lo_i]
            ),
        );
    }
    res.check(
        "median-at-least-beta",
        floor_ok,
        "no party decides before beta rounds",
    );
    res.check(
        "no-adversary-latency-equals-beta",
        control_ok,
        "from unanimity every round is a one-majority",
    );
    Ok(res)
}

fn argmin(xs: &[u32]) -> Option<usize> {
    (0..xs.len()).min_by_key(|&i| xs[i])
}

fn argmax(xs: &[u32]) -> Option<usize> {
    (0..xs.len()).max_by_key(|&i| xs[i])
}
