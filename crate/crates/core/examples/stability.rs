//! Starts Slush one party short of unanimity under a flipping adversary and
//! reports the lowest one-share seen.

use snowsim::adversary::{Adversary, AdversaryStrategy};
use snowsim::protocol::{ProtocolKind, ProtocolParams};
use snowsim::simulator::{run_round, NetworkState};

fn main() -> snowsim::Result<()> {
    let n = 4096;
    let params = ProtocolParams::new(ProtocolKind::Slush, 10, 6);
    let strategy = AdversaryStrategy::FlipToMinority { budget: 64 };
    for seed in 0..5 {
        let mut net = NetworkState::with_ones(ProtocolKind::Slush, n, n - 1);
        let mut adv = Adversary::new(strategy, &net)?;
        let mut low = net.ones();
        for _ in 0..20 {
            low = low.min(run_round(&mut net, &params, &mut adv, seed).ones);
        }
        println!("seed {seed}: lowest S = {low} ({:.4} n), floor 15n/16 = {}", low as f64 / n as f64, 15 * n / 16);
    }
    Ok(())
}
