//! One Snowflake run on 1000 parties with a small flipping adversary.

use snowsim::adversary::AdversaryStrategy;
use snowsim::protocol::{ProtocolKind, ProtocolParams};
use snowsim::simulator::{run, NetworkState, RunOptions};

fn main() -> snowsim::Result<()> {
    let params = ProtocolParams::new(ProtocolKind::Snowflake, 10, 7).with_beta(15);
    let start = NetworkState::with_share(ProtocolKind::Snowflake, 1000, 0.5);
    let adversary = AdversaryStrategy::FlipToMinority { budget: 20 };
    let m = run(start, &params, adversary, 2024, &RunOptions::new(10_000))?;
    println!("rounds:            {}", m.rounds);
    println!("terminated:        {}", m.terminated);
    println!("agreement:         {}", m.agreement);
    println!("decided parties:   {}", m.decided_count());
    println!("last decision:     {:?}", m.max_decision_round());
    println!("first 10 S values: {:?}", &m.s_trace[..m.s_trace.len().min(10)]);
    Ok(())
}
