//! A split-group adversary against Snowflake with `k = alpha = 2`: decision
//! latency grows quickly with `beta`.

use snowsim::adversary::AdversaryStrategy;
use snowsim::experiments::stats::median;
use snowsim::protocol::{ProtocolKind, ProtocolParams};
use snowsim::simulator::{run, NetworkState, RunOptions};

fn main() -> snowsim::Result<()> {
    let n = 100;
    let attack = AdversaryStrategy::SplitGroups { budget: 40 };
    for beta in [4, 8, 12, 16] {
        let params = ProtocolParams::new(ProtocolKind::Snowflake, 2, 2).with_beta(beta);
        let mut latencies = Vec::new();
        for seed in 0..10 {
            let m = run(NetworkState::with_share(ProtocolKind::Snowflake, n, 0.5), &params, attack, seed, &RunOptions::new(200_000))?;
            latencies.extend(m.honest_decision_rounds().map(|r| f64::from(r.unwrap_or(200_000))));
        }
        println!("beta={beta:>2}  median latency {:>8}", median(&latencies));
    }
    Ok(())
}
