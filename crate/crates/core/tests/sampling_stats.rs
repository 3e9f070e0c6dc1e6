mod support;

use snowsim::adversary::{Adversary, AdversaryStrategy};
use snowsim::protocol::{Opinion, ProtocolKind, ProtocolParams};
use snowsim::sampling::{draw_index, RngStream, RoundKey, SamplingMode};
use snowsim::simulator::{run_round, NetworkState};

use support::{delta_oracle, ks_binomial, mean, std_error};

#[test]
fn draws_are_uniform_over_ten_parties() {
    let n = 10;
    let draws = 1_000_000;
    let mut hist = [0usize; 10];
    let key = RoundKey::new(7, 1);
    for party in 0..draws / 100 {
        let mut rng = key.rng(party as u64);
        for _ in 0..100 {
            hist[draw_index(&mut rng, n, 0, SamplingMode::WithRepetitionAll)] += 1;
        }
    }
    for (i, &c) in hist.iter().enumerate() {
        let f = c as f64 / draws as f64;
        assert!((f - 0.1).abs() < 0.002, "index {i}: frequency {f}");
    }
}

#[test]
fn exclude_self_is_uniform_over_others() {
    let n = 5;
    let mut hist = [0usize; 5];
    for party in 0..20_000u64 {
        let mut rng = RngStream::new(3, party, 1).rng();
        for _ in 0..10 {
            hist[draw_index(&mut rng, n, 2, SamplingMode::WithRepetitionExcludeSelf)] += 1;
        }
    }
    assert_eq!(hist[2], 0);
    for i in [0, 1, 3, 4] {
        let f = hist[i] as f64 / 200_000.0;
        assert!((f - 0.25).abs() < 0.005, "index {i}: {f}");
    }
}

/// One-replies in a query against a fixed snapshot follow `Bin(k, S/n)`.
#[test]
fn one_replies_are_binomial() {
    let (n, ones, k) = (1000, 300, 10);
    let snapshot: Vec<bool> = (0..n).map(|i| i < ones).collect();
    let key = RoundKey::new(99, 4);
    let counts: Vec<u32> = (0..100_000u64)
        .map(|party| {
            let mut rng = key.rng(party);
            (0..k)
                .filter(|_| snapshot[draw_index(&mut rng, n, 0, SamplingMode::WithRepetitionAll)])
                .count() as u32
        })
        .collect();
    let d = ks_binomial(&counts, k as u32, 0.3);
    assert!(d < 0.01, "KS distance {d}");
}

fn one_round_progress(n: usize, ones: usize, k: u32, alpha: u32, seeds: u64) -> Vec<f64> {
    let params = ProtocolParams::new(ProtocolKind::Slush, k, alpha);
    (0..seeds)
        .map(|seed| {
            let mut net = NetworkState::with_ones(ProtocolKind::Slush, n, ones);
            let mut adv = Adversary::new(AdversaryStrategy::NoAdversary, &net).unwrap();
            run_round(&mut net, &params, &mut adv, seed);
            (net.ones() as f64 - ones as f64) / n as f64
        })
        .collect()
}

#[test]
fn single_round_progress_matches_delta() {
    // delta^{3,2}(3/4) = 3/32
    assert!((delta_oracle(3, 2, 0.75) - 0.09375).abs() < 1e-15);
    let xs = one_round_progress(4000, 3000, 3, 2, 400);
    let (m, se) = (mean(&xs), std_error(&xs));
    assert!((m - 0.09375).abs() < 4.0 * se, "mean {m}, se {se}");
}

#[test]
fn k1_walk_has_no_drift() {
    let xs = one_round_progress(2000, 1000, 1, 1, 400);
    let (m, se) = (mean(&xs), std_error(&xs));
    assert!(m.abs() < 4.0 * se, "mean {m}, se {se}");
    assert_eq!(delta_oracle(1, 1, 0.5), 0.0);
}

#[test]
fn bot_parties_keep_the_snapshot_binomial() {
    // Bots answer with the querier's value, so a one-holder facing a
    // network of bots sees only ones.
    let mut net = NetworkState::from_opinions(
        ProtocolKind::Slush,
        std::iter::once(Opinion::One).chain(std::iter::repeat(Opinion::Bot).take(9)),
    );
    let params = ProtocolParams::new(ProtocolKind::Slush, 5, 3);
    let mut adv = Adversary::new(AdversaryStrategy::NoAdversary, &net).unwrap();
    let rec = run_round(&mut net, &params, &mut adv, 5);
    assert_eq!(net.parties[0].opinion, Opinion::One);
    assert!(rec.ones >= 1);
}
