//! Steps a single Snowball party through hand-written query outcomes.

use snowsim::protocol::{apply_round_outcome, init_party, Opinion, ProtocolKind, ProtocolParams, QueryOutcome};

fn main() -> snowsim::Result<()> {
    let params = ProtocolParams::new(ProtocolKind::Snowball, 5, 3).with_beta(3);
    let mut s = init_party(ProtocolKind::Snowball, Opinion::Zero);
    // (zero votes, one votes) per round
    for (z, o) in [(1, 4), (3, 2), (0, 5), (2, 3), (2, 3), (1, 4)] {
        s = apply_round_outcome(&s, &QueryOutcome::from_counts(z, o, params.alpha), &params)?;
        println!(
            "votes {z}:{o}  opinion={:<4} streak={} confidence={:?} decided={:?}",
            s.opinion.to_string(),
            s.streak_cnt,
            s.confidence,
            s.decided_value
        );
        if s.decided {
            break;
        }
    }
    Ok(())
}
